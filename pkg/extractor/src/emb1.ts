/**
 * Binary embedding-file format shared with the analysis toolkit.
 *
 * Layout (all integers u32 little-endian, all floats f32 little-endian):
 *
 *   magic "EMB1" | version=1 | numLayers L | hiddenDim D | numSentences N
 *   | manifest byte length | UTF-8 JSON manifest (must carry "lang")
 *   | per sentence:
 *       numTokens T | numWords W
 *       | W groups, each: group length, then that many token indices
 *       | per layer: D floats ([cls] state), then T*D floats of token
 *         states, row-major
 *
 * Layer 0 is the embedding-layer output; indices increase toward the model
 * output. Token states exclude special positions ([cls]/[sep]); the [cls]
 * state is stored separately per layer.
 */
import { readFileSync, writeFileSync } from "node:fs";

export const MAGIC = "EMB1";
export const VERSION = 1;

export interface SentenceRecord {
  /** Flat row-major [numLayers][numTokens][hiddenDim]. */
  tokenStates: Float32Array;
  /** Flat row-major [numLayers][hiddenDim]. */
  clsStates: Float32Array;
  /** One entry per surface word: the indices of its subword tokens. */
  wordGroups: number[][];
  numTokens: number;
}

export interface EmbeddingFile {
  lang: string;
  numLayers: number;
  hiddenDim: number;
  manifest: Record<string, unknown>;
  sentences: SentenceRecord[];
}

/** JSON.stringify with recursively sorted object keys, for byte-stable output. */
export function stableStringify(value: unknown): string {
  if (Array.isArray(value)) {
    return "[" + value.map(stableStringify).join(",") + "]";
  }
  if (value !== null && typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
      .map(([k, v]) => JSON.stringify(k) + ":" + stableStringify(v));
    return "{" + entries.join(",") + "}";
  }
  return JSON.stringify(value);
}

function validate(file: EmbeddingFile): void {
  const { numLayers: L, hiddenDim: D } = file;
  if (L < 1 || D < 1) {
    throw new Error(`numLayers and hiddenDim must be >= 1, got ${L} x ${D}`);
  }
  if (file.manifest["lang"] !== file.lang) {
    throw new Error(
      `manifest lang ${String(file.manifest["lang"])} does not match file lang ${file.lang}`,
    );
  }
  file.sentences.forEach((sentence, index) => {
    const T = sentence.numTokens;
    if (sentence.tokenStates.length !== L * T * D) {
      throw new Error(
        `sentence ${index}: tokenStates has ${sentence.tokenStates.length} values, expected ${L * T * D}`,
      );
    }
    if (sentence.clsStates.length !== L * D) {
      throw new Error(
        `sentence ${index}: clsStates has ${sentence.clsStates.length} values, expected ${L * D}`,
      );
    }
    const flat = sentence.wordGroups.flat();
    const expected = Array.from({ length: T }, (_, i) => i);
    if (
      sentence.wordGroups.some((group) => group.length === 0) ||
      flat.length !== T ||
      flat.some((v, i) => v !== expected[i])
    ) {
      throw new Error(
        `sentence ${index}: wordGroups do not partition token indices 0..${T - 1}`,
      );
    }
  });
}

export function encodeEmbeddingFile(file: EmbeddingFile): Buffer {
  validate(file);
  const manifestBytes = Buffer.from(stableStringify(file.manifest), "utf-8");

  let size = 4 + 4 * 4 + 4 + manifestBytes.length;
  for (const sentence of file.sentences) {
    size += 8; // numTokens + numWords
    for (const group of sentence.wordGroups) size += 4 + 4 * group.length;
    size += 4 * (sentence.clsStates.length + sentence.tokenStates.length);
  }

  const buf = Buffer.alloc(size);
  let at = 0;
  at += buf.write(MAGIC, at, "ascii");
  at = buf.writeUInt32LE(VERSION, at);
  at = buf.writeUInt32LE(file.numLayers, at);
  at = buf.writeUInt32LE(file.hiddenDim, at);
  at = buf.writeUInt32LE(file.sentences.length, at);
  at = buf.writeUInt32LE(manifestBytes.length, at);
  at += manifestBytes.copy(buf, at);

  const { numLayers: L, hiddenDim: D } = file;
  for (const sentence of file.sentences) {
    const T = sentence.numTokens;
    at = buf.writeUInt32LE(T, at);
    at = buf.writeUInt32LE(sentence.wordGroups.length, at);
    for (const group of sentence.wordGroups) {
      at = buf.writeUInt32LE(group.length, at);
      for (const tokenIndex of group) at = buf.writeUInt32LE(tokenIndex, at);
    }
    for (let layer = 0; layer < L; layer += 1) {
      for (let d = 0; d < D; d += 1) {
        at = buf.writeFloatLE(sentence.clsStates[layer * D + d], at);
      }
      const layerBase = layer * T * D;
      for (let i = 0; i < T * D; i += 1) {
        at = buf.writeFloatLE(sentence.tokenStates[layerBase + i], at);
      }
    }
  }
  if (at !== size) {
    throw new Error(`internal size accounting error: wrote ${at} of ${size}`);
  }
  return buf;
}

export function writeEmbeddingFile(file: EmbeddingFile, path: string): number {
  const buf = encodeEmbeddingFile(file);
  writeFileSync(path, buf);
  return buf.length;
}

export function readEmbeddingFile(path: string): EmbeddingFile {
  const buf = readFileSync(path);
  let at = 0;
  const u32 = (what: string): number => {
    if (at + 4 > buf.length) throw new Error(`truncated file reading ${what} at ${at}`);
    const v = buf.readUInt32LE(at);
    at += 4;
    return v;
  };
  if (buf.subarray(0, 4).toString("ascii") !== MAGIC) {
    throw new Error(`bad magic at offset 0`);
  }
  at = 4;
  const version = u32("version");
  if (version !== VERSION) throw new Error(`unsupported version ${version}`);
  const numLayers = u32("numLayers");
  const hiddenDim = u32("hiddenDim");
  const numSentences = u32("numSentences");
  const manifestLen = u32("manifest length");
  const manifest = JSON.parse(buf.subarray(at, at + manifestLen).toString("utf-8"));
  at += manifestLen;

  const sentences: SentenceRecord[] = [];
  for (let s = 0; s < numSentences; s += 1) {
    const numTokens = u32(`sentence ${s} numTokens`);
    const numWords = u32(`sentence ${s} numWords`);
    const wordGroups: number[][] = [];
    for (let w = 0; w < numWords; w += 1) {
      const len = u32(`sentence ${s} group ${w} length`);
      const group: number[] = [];
      for (let i = 0; i < len; i += 1) group.push(u32("group index"));
      wordGroups.push(group);
    }
    const clsStates = new Float32Array(numLayers * hiddenDim);
    const tokenStates = new Float32Array(numLayers * numTokens * hiddenDim);
    for (let layer = 0; layer < numLayers; layer += 1) {
      for (let d = 0; d < hiddenDim; d += 1) {
        clsStates[layer * hiddenDim + d] = buf.readFloatLE(at);
        at += 4;
      }
      const base = layer * numTokens * hiddenDim;
      for (let i = 0; i < numTokens * hiddenDim; i += 1) {
        tokenStates[base + i] = buf.readFloatLE(at);
        at += 4;
      }
    }
    sentences.push({ tokenStates, clsStates, wordGroups, numTokens });
  }
  const file: EmbeddingFile = {
    lang: String(manifest["lang"]),
    numLayers,
    hiddenDim,
    manifest,
    sentences,
  };
  validate(file);
  return file;
}
