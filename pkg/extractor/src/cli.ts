#!/usr/bin/env node
/**
 * Command-line entry point.
 *
 *   langneutral-extract --model <onnx-path | deterministic:SEED:LxD> \
 *     --input corpus.txt --lang de --vocab vocab.txt [--out corpus.emb1] \
 *     [--max-tokens 128] [--batch-size 16] [--lowercase] [--strip-accents]
 *
 * Exit codes: 0 success, 1 usage error, 2 extraction/data error.
 */
import { parseArgs } from "node:util";

import { runExtraction } from "./extract.js";

const USAGE =
  "usage: langneutral-extract --model M --input FILE --lang CODE --vocab FILE\n" +
  "         [--out FILE] [--max-tokens N] [--batch-size N]\n" +
  "         [--lowercase] [--strip-accents] [--device NAME]\n";

export async function main(argv: string[]): Promise<number> {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        model: { type: "string" },
        input: { type: "string" },
        lang: { type: "string" },
        vocab: { type: "string" },
        out: { type: "string" },
        "max-tokens": { type: "string", default: "128" },
        "batch-size": { type: "string", default: "16" },
        lowercase: { type: "boolean", default: false },
        "strip-accents": { type: "boolean", default: false },
        device: { type: "string" },
        help: { type: "boolean", default: false },
      },
    }));
  } catch (error) {
    process.stderr.write(`${(error as Error).message}\n${USAGE}`);
    return 1;
  }
  if (values.help) {
    process.stdout.write(USAGE);
    return 0;
  }
  for (const required of ["model", "input", "lang", "vocab"] as const) {
    if (!values[required]) {
      process.stderr.write(`missing --${required}\n${USAGE}`);
      return 1;
    }
  }

  const outputPath = values.out ?? values.input!.replace(/(\.txt)?$/, ".emb1");
  try {
    const stats = await runExtraction({
      modelId: values.model!,
      inputPath: values.input!,
      lang: values.lang!,
      vocabPath: values.vocab!,
      outputPath,
      maxTokens: Number(values["max-tokens"]),
      batchSize: Number(values["batch-size"]),
      lowercase: values.lowercase,
      stripAccents: values["strip-accents"],
      device: values.device,
    });
    process.stdout.write(
      JSON.stringify({
        output: outputPath,
        sentences: stats.sentences,
        truncated: stats.truncated,
        num_layers: stats.numLayers,
        hidden_dim: stats.hiddenDim,
        bytes: stats.bytes,
      }) + "\n",
    );
    return 0;
  } catch (error) {
    process.stderr.write(`langneutral-extract: error: ${(error as Error).message}\n`);
    return 2;
  }
}

const isDirectRun =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isDirectRun) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
