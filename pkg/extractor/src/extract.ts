/**
 * Extraction pipeline: text file in, embedding file out.
 *
 * One sentence per input line. Sentences longer than the token budget are
 * truncated with a logged warning, never dropped, so line numbers stay
 * aligned between the text corpus and the embedding file. The adapter does
 * no post-processing of vectors (no normalization, no pooling): pooling
 * belongs to the analysis toolkit so each formula exists exactly once.
 */
import { readFileSync } from "node:fs";
import { basename } from "node:path";

import { Encoder, resolveEncoder } from "./encoder.js";
import { EmbeddingFile, SentenceRecord, writeEmbeddingFile } from "./emb1.js";
import {
  TokenizationError,
  WordPieceTokenizer,
  loadVocabulary,
} from "./tokenizer.js";

export interface ExtractionJob {
  /** "deterministic:<seed>:<layers>x<dim>" or a path to an ONNX model. */
  modelId: string;
  inputPath: string;
  lang: string;
  outputPath: string;
  vocabPath: string;
  maxTokens?: number;
  batchSize?: number;
  lowercase?: boolean;
  stripAccents?: boolean;
  device?: string;
  log?: (message: string) => void;
}

export interface ExtractionStats {
  sentences: number;
  truncated: number;
  bytes: number;
  numLayers: number;
  hiddenDim: number;
}

export async function runExtraction(job: ExtractionJob): Promise<ExtractionStats> {
  const log = job.log ?? ((message: string) => console.error(message));
  const maxTokens = job.maxTokens ?? 128;
  const batchSize = job.batchSize ?? 16;
  if (maxTokens < 1 || batchSize < 1) {
    throw new Error("maxTokens and batchSize must be >= 1");
  }

  const vocab = loadVocabulary(job.vocabPath);
  const tokenizer = new WordPieceTokenizer(vocab, {
    lowercase: job.lowercase,
    stripAccents: job.stripAccents,
  });
  const encoder: Encoder = await resolveEncoder(
    job.modelId,
    {
      clsId: tokenizer.tokenId("[CLS]"),
      sepId: tokenizer.tokenId("[SEP]"),
      padId: tokenizer.tokenId("[PAD]"),
    },
    job.device,
  );

  try {
    const raw = readFileSync(job.inputPath, "utf-8");
    const lines = raw.split("\n");
    if (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
    if (lines.length === 0) {
      throw new Error(`${job.inputPath}: no sentences`);
    }

    let truncatedCount = 0;
    const tokenized = lines.map((line, index) => {
      try {
        const sentence = tokenizer.encode(line, maxTokens);
        if (sentence.truncated) {
          truncatedCount += 1;
          log(
            `warning: ${job.inputPath}:${index + 1} truncated to ${maxTokens} tokens`,
          );
        }
        return sentence;
      } catch (error) {
        if (error instanceof TokenizationError) {
          throw new TokenizationError(
            `${job.inputPath}:${index + 1}: ${error.message}`,
          );
        }
        throw error;
      }
    });

    const records: SentenceRecord[] = [];
    for (let start = 0; start < tokenized.length; start += batchSize) {
      const chunk = tokenized.slice(start, start + batchSize);
      const encoded = await encoder.encodeBatch(chunk.map((s) => s.ids));
      encoded.forEach((states, i) => {
        records.push({
          tokenStates: states.tokenStates,
          clsStates: states.clsStates,
          wordGroups: chunk[i].wordGroups,
          numTokens: chunk[i].ids.length,
        });
      });
    }

    const file: EmbeddingFile = {
      lang: job.lang,
      numLayers: encoder.numLayers,
      hiddenDim: encoder.hiddenDim,
      manifest: {
        lang: job.lang,
        model: encoder.id,
        tokenizer: tokenizer.vocabId,
        layer0: "embedding-output",
        truncated_sentences: truncatedCount,
        max_tokens: maxTokens,
        source_file: basename(job.inputPath),
      },
      sentences: records,
    };
    const bytes = writeEmbeddingFile(file, job.outputPath);
    return {
      sentences: records.length,
      truncated: truncatedCount,
      bytes,
      numLayers: encoder.numLayers,
      hiddenDim: encoder.hiddenDim,
    };
  } finally {
    await encoder.close();
  }
}
