/**
 * Encoders turn token-id sequences into per-layer hidden states.
 *
 * Two implementations: an ONNX-backed one for real pretrained models
 * (exported with all hidden states), and a seeded deterministic one that
 * produces valid, context-dependent shapes with no model assets, used to
 * validate the pipeline and the file format end to end. The deterministic
 * encoder is not a language model; its id is recorded in output manifests
 * so downstream analyses can never mistake it for one.
 */

export interface EncodedSentence {
  /** Flat [numLayers][hiddenDim]: the [cls] position per layer. */
  clsStates: Float32Array;
  /** Flat [numLayers][numTokens][hiddenDim]: non-special tokens per layer. */
  tokenStates: Float32Array;
}

export interface Encoder {
  readonly id: string;
  /** Hidden states emitted per token: embedding output plus each layer. */
  readonly numLayers: number;
  readonly hiddenDim: number;
  encodeBatch(batch: number[][]): Promise<EncodedSentence[]>;
  close(): Promise<void>;
}

/* ------------------------------------------------ deterministic encoder */

function mix64(value: bigint): bigint {
  let x = value & 0xffffffffffffffffn;
  x = (x ^ (x >> 30n)) * 0xbf58476d1ce4e5b9n & 0xffffffffffffffffn;
  x = (x ^ (x >> 27n)) * 0x94d049bb133111ebn & 0xffffffffffffffffn;
  return x ^ (x >> 31n);
}

/** Unit-interval float from a counter-based hash; no call-order state. */
function hashedFloat(...keys: number[]): number {
  let acc = 0x9e3779b97f4a7c15n;
  for (const key of keys) {
    acc = mix64(acc ^ BigInt.asUintN(64, BigInt(Math.trunc(key))));
  }
  return Number(acc >> 11n) / Number(1n << 53n);
}

export class DeterministicEncoder implements Encoder {
  readonly id: string;
  readonly numLayers: number;
  readonly hiddenDim: number;
  private readonly seed: number;

  constructor(seed: number, numLayers: number, hiddenDim: number) {
    if (numLayers < 1 || hiddenDim < 1) {
      throw new Error("encoder needs numLayers >= 1 and hiddenDim >= 1");
    }
    this.seed = seed;
    this.numLayers = numLayers;
    this.hiddenDim = hiddenDim;
    this.id = `deterministic:${seed}:${numLayers}x${hiddenDim}`;
  }

  async encodeBatch(batch: number[][]): Promise<EncodedSentence[]> {
    const { numLayers: L, hiddenDim: D } = this;
    return batch.map((ids) => {
      // fold the whole sentence into the key so states are contextual
      let context = this.seed;
      for (const id of ids) context = (context * 31 + id + 1) % 2147483647;
      const tokenStates = new Float32Array(L * ids.length * D);
      const clsStates = new Float32Array(L * D);
      for (let layer = 0; layer < L; layer += 1) {
        for (let d = 0; d < D; d += 1) {
          clsStates[layer * D + d] =
            2 * hashedFloat(this.seed, context, layer, -1, d) - 1;
        }
        for (let t = 0; t < ids.length; t += 1) {
          const base = layer * ids.length * D + t * D;
          for (let d = 0; d < D; d += 1) {
            tokenStates[base + d] =
              2 * hashedFloat(this.seed, context, layer, ids[t], t, d) - 1;
          }
        }
      }
      return { clsStates, tokenStates };
    });
  }

  async close(): Promise<void> {}
}

/* -------------------------------------------------------- onnx encoder */

export interface OnnxEncoderOptions {
  modelPath: string;
  clsId: number;
  sepId: number;
  padId: number;
  /** Add token_type_ids zeros if the graph asks for them. */
  device?: string;
}

interface OrtTensorLike {
  data: Float32Array;
  dims: readonly number[];
}

interface SessionLike {
  run(feeds: Record<string, unknown>): Promise<Record<string, OrtTensorLike>>;
  inputNames: readonly string[];
  outputNames: readonly string[];
  release(): Promise<void>;
}

/**
 * Runs a transformer encoder exported to ONNX with all hidden states as
 * outputs (for example via optimum's export with output_hidden_states).
 * Outputs whose names contain "hidden_state" are collected in numeric
 * order; layer 0 is the embedding output. A model exposing only
 * last_hidden_state is refused, because the toolkit's layer sweeps would
 * silently degenerate.
 */
export class OnnxEncoder implements Encoder {
  readonly id: string;
  readonly numLayers: number;
  readonly hiddenDim: number;
  private readonly session: SessionLike;
  private readonly ort: {
    Tensor: new (type: string, data: BigInt64Array, dims: number[]) => unknown;
  };
  private readonly stateNames: string[];
  private readonly options: OnnxEncoderOptions;

  private constructor(
    session: SessionLike,
    ort: OnnxEncoder["ort"],
    stateNames: string[],
    hiddenDim: number,
    options: OnnxEncoderOptions,
  ) {
    this.session = session;
    this.ort = ort;
    this.stateNames = stateNames;
    this.numLayers = stateNames.length;
    this.hiddenDim = hiddenDim;
    this.options = options;
    this.id = `onnx:${options.modelPath}`;
  }

  static async create(options: OnnxEncoderOptions): Promise<OnnxEncoder> {
    const ort = await import("onnxruntime-node");
    // tensor payload types are unions in the ort API; this encoder only
    // ever reads float32 hidden states, checked per tensor at run time
    const session = (await ort.InferenceSession.create(options.modelPath, {
      executionProviders: [options.device ?? "cpu"],
    })) as unknown as SessionLike;
    const stateNames = session.outputNames
      .filter((name: string) => /hidden_state/i.test(name) && !/^last_/i.test(name))
      .sort((a: string, b: string) => {
        const na = Number((a.match(/\d+/) ?? ["0"])[0]);
        const nb = Number((b.match(/\d+/) ?? ["0"])[0]);
        return na - nb;
      });
    if (stateNames.length === 0) {
      await session.release();
      throw new Error(
        `model ${options.modelPath} exposes no per-layer hidden-state ` +
          "outputs; re-export it with all hidden states enabled",
      );
    }
    // hidden dim is discovered on the first run; start with 0 placeholder
    const encoder = new OnnxEncoder(
      session,
      ort,
      stateNames,
      0,
      options,
    );
    return encoder;
  }

  async encodeBatch(batch: number[][]): Promise<EncodedSentence[]> {
    const { clsId, sepId, padId } = this.options;
    const maxLen = Math.max(...batch.map((ids) => ids.length)) + 2;
    const size = batch.length * maxLen;
    const inputIds = new BigInt64Array(size).fill(BigInt(padId));
    const attention = new BigInt64Array(size).fill(0n);
    batch.forEach((ids, row) => {
      const offset = row * maxLen;
      inputIds[offset] = BigInt(clsId);
      ids.forEach((id, i) => {
        inputIds[offset + 1 + i] = BigInt(id);
      });
      inputIds[offset + 1 + ids.length] = BigInt(sepId);
      for (let i = 0; i < ids.length + 2; i += 1) attention[offset + i] = 1n;
    });

    const feeds: Record<string, unknown> = {
      input_ids: new this.ort.Tensor("int64", inputIds, [batch.length, maxLen]),
      attention_mask: new this.ort.Tensor("int64", attention, [batch.length, maxLen]),
    };
    if (this.session.inputNames.includes("token_type_ids")) {
      feeds["token_type_ids"] = new this.ort.Tensor(
        "int64",
        new BigInt64Array(size),
        [batch.length, maxLen],
      );
    }
    const outputs = await this.session.run(feeds);
    const layers = this.stateNames.map((name) => outputs[name]);
    const dim = layers[0].dims[2];
    if (this.hiddenDim === 0) {
      (this as { hiddenDim: number }).hiddenDim = dim;
    }

    return batch.map((ids, row) => {
      const T = ids.length;
      const clsStates = new Float32Array(this.numLayers * dim);
      const tokenStates = new Float32Array(this.numLayers * T * dim);
      layers.forEach((tensor, layer) => {
        const rowBase = row * maxLen * dim;
        clsStates.set(
          tensor.data.subarray(rowBase, rowBase + dim),
          layer * dim,
        );
        // positions 1..T are the real tokens; the final [sep] is dropped
        tokenStates.set(
          tensor.data.subarray(rowBase + dim, rowBase + (1 + T) * dim),
          layer * T * dim,
        );
      });
      return { clsStates, tokenStates };
    });
  }

  async close(): Promise<void> {
    await this.session.release();
  }
}

/**
 * Resolve a model identifier: "deterministic:<seed>:<layers>x<dim>" for the
 * offline encoder, anything else is a path to an ONNX model file.
 */
export async function resolveEncoder(
  modelId: string,
  special: { clsId: number; sepId: number; padId: number },
  device?: string,
): Promise<Encoder> {
  const det = modelId.match(/^deterministic:(\d+):(\d+)x(\d+)$/);
  if (det) {
    return new DeterministicEncoder(
      Number(det[1]),
      Number(det[2]),
      Number(det[3]),
    );
  }
  return OnnxEncoder.create({ modelPath: modelId, device, ...special });
}
