import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { readEmbeddingFile } from "../src/emb1.js";
import { runExtraction } from "../src/extract.js";

const here = dirname(fileURLToPath(import.meta.url));
const vocabPath = join(here, "..", "vocab", "mini_vocab.txt");
const primarySrc = join(here, "..", "..", "src");

/** 100 deterministic pseudo-multilingual sentences over the test vocab. */
function multilingualSample(): string[] {
  const pools = [
    ["hello", "world", "the", "walking", "unbreakable"],
    ["der", "die", "das", "ist", "ein", "haus", "berlin"],
    ["le", "la", "monde", "est", "bon", "jour", "madrid"],
    ["svet", "dobry", "den", "mir", "privet", "dom", "kot", "pes", "slovo"],
  ];
  const lines: string[] = [];
  for (let i = 0; i < 100; i += 1) {
    const pool = pools[i % pools.length];
    const length = 3 + (i % 5);
    const words: string[] = [];
    for (let j = 0; j < length; j += 1) {
      words.push(pool[(i * 7 + j * 3) % pool.length]);
    }
    if (i % 9 === 0) words.push("zzz" + i); // out-of-vocabulary word
    lines.push(words.join(" ") + (i % 4 === 0 ? " ." : ""));
  }
  return lines;
}

function writeSample(dir: string): string {
  const inputPath = join(dir, "sample.txt");
  writeFileSync(inputPath, multilingualSample().join("\n") + "\n");
  return inputPath;
}

describe("runExtraction with the deterministic encoder", () => {
  it("produces a valid file with matching shapes for 100 sentences", async () => {
    const dir = mkdtempSync(join(tmpdir(), "extract-"));
    const inputPath = writeSample(dir);
    const outputPath = join(dir, "sample.emb1");
    const stats = await runExtraction({
      modelId: "deterministic:7:4x16",
      inputPath,
      lang: "xx",
      vocabPath,
      outputPath,
      log: () => {},
    });
    expect(stats.sentences).toBe(100);
    expect(stats.numLayers).toBe(4);
    expect(stats.hiddenDim).toBe(16);

    const back = readEmbeddingFile(outputPath);
    expect(back.sentences).toHaveLength(100);
    expect(back.numLayers).toBe(4);
    expect(back.hiddenDim).toBe(16);
    expect(back.manifest["model"]).toBe("deterministic:7:4x16");
    for (const sentence of back.sentences) {
      const flat = sentence.wordGroups.flat();
      expect(flat).toEqual(Array.from({ length: sentence.numTokens }, (_, i) => i));
    }
  });

  it("parses in the analysis toolkit with matching N/L/D", async () => {
    const dir = mkdtempSync(join(tmpdir(), "extract-"));
    const inputPath = writeSample(dir);
    const outputPath = join(dir, "sample.emb1");
    await runExtraction({
      modelId: "deterministic:7:3x8",
      inputPath,
      lang: "de",
      vocabPath,
      outputPath,
      log: () => {},
    });

    const proc = spawnSync(
      "python3",
      ["-m", "langneutral.cli", "info", outputPath],
      {
        encoding: "utf-8",
        env: {
          ...process.env,
          PYTHONPATH:
            primarySrc +
            (process.env.PYTHONPATH ? `:${process.env.PYTHONPATH}` : ""),
        },
      },
    );
    expect(proc.status, proc.stderr).toBe(0);
    const doc = JSON.parse(proc.stdout);
    expect(doc.num_sentences).toBe(100);
    expect(doc.num_layers).toBe(3);
    expect(doc.hidden_dim).toBe(8);
    expect(doc.lang).toBe("de");
    expect(doc.manifest.tokenizer).toContain("mini_vocab");
  });

  it("is byte-identical across two runs on the same input", async () => {
    const dir = mkdtempSync(join(tmpdir(), "extract-"));
    const inputPath = writeSample(dir);
    const first = join(dir, "a.emb1");
    const second = join(dir, "b.emb1");
    const job = {
      modelId: "deterministic:11:2x4",
      inputPath,
      lang: "xx",
      vocabPath,
      log: () => {},
    };
    await runExtraction({ ...job, outputPath: first });
    await runExtraction({ ...job, outputPath: second });
    expect(readFileSync(first).equals(readFileSync(second))).toBe(true);
  });

  it("truncates long sentences with a warning instead of dropping them", async () => {
    const dir = mkdtempSync(join(tmpdir(), "extract-"));
    const inputPath = join(dir, "long.txt");
    writeFileSync(
      inputPath,
      ["hello world", Array(50).fill("walking").join(" "), "der haus"].join("\n") +
        "\n",
    );
    const outputPath = join(dir, "long.emb1");
    const warnings: string[] = [];
    const stats = await runExtraction({
      modelId: "deterministic:3:2x4",
      inputPath,
      lang: "xx",
      vocabPath,
      outputPath,
      maxTokens: 10,
      log: (message) => warnings.push(message),
    });
    expect(stats.sentences).toBe(3);
    expect(stats.truncated).toBe(1);
    expect(warnings).toHaveLength(1);
    expect(warnings[0]).toContain(":2");
    const back = readEmbeddingFile(outputPath);
    expect(back.sentences[1].numTokens).toBe(10);
    expect(back.manifest["truncated_sentences"]).toBe(1);
  });

  it("reports the line number of untokenizable input", async () => {
    const dir = mkdtempSync(join(tmpdir(), "extract-"));
    const inputPath = join(dir, "bad.txt");
    writeFileSync(inputPath, "hello\n\nworld\n");
    await expect(
      runExtraction({
        modelId: "deterministic:3:2x4",
        inputPath,
        lang: "xx",
        vocabPath,
        outputPath: join(dir, "bad.emb1"),
        log: () => {},
      }),
    ).rejects.toThrow(/bad\.txt:2/);
  });

  it("one word split into three subwords yields one group of three", async () => {
    const dir = mkdtempSync(join(tmpdir(), "extract-"));
    const inputPath = join(dir, "one.txt");
    writeFileSync(inputPath, "unbreakable\n");
    const outputPath = join(dir, "one.emb1");
    await runExtraction({
      modelId: "deterministic:3:2x4",
      inputPath,
      lang: "xx",
      vocabPath,
      outputPath,
      log: () => {},
    });
    const back = readEmbeddingFile(outputPath);
    expect(back.sentences[0].numTokens).toBe(3);
    expect(back.sentences[0].wordGroups).toEqual([[0, 1, 2]]);
  });
});

describe("onnx-backed extraction", () => {
  it.skipIf(!process.env.EXTRACTOR_MODEL_DIR)(
    "extracts with a real exported model",
    async () => {
      const modelDir = process.env.EXTRACTOR_MODEL_DIR!;
      const dir = mkdtempSync(join(tmpdir(), "extract-onnx-"));
      const inputPath = writeSample(dir);
      const outputPath = join(dir, "real.emb1");
      const stats = await runExtraction({
        modelId: join(modelDir, "model.onnx"),
        inputPath,
        lang: "xx",
        vocabPath: join(modelDir, "vocab.txt"),
        outputPath,
        lowercase: false,
      });
      expect(stats.sentences).toBe(100);
      expect(stats.numLayers).toBeGreaterThan(1);
      const back = readEmbeddingFile(outputPath);
      expect(back.numLayers).toBe(stats.numLayers);
    },
  );
});
