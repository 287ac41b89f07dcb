/*
 * Encoding backends.  A backend tokenizes a batch of texts, truncates each
 * to the token budget, and returns per-token hidden states plus the token
 * mask; pooling happens outside.
 *
 * Two families: "hash" (and "hash-<dim>") is a deterministic offline
 * encoder for tests and plumbing checks; anything else is treated as a
 * pretrained checkpoint identifier and served through transformers.js,
 * which is loaded dynamically so the package works without it installed.
 */

export interface EncodedText {
  states: Float32Array; // seq * dim values, real tokens only or padded per mask
  mask: Uint8Array; // 1 marks a real token position
  dim: number;
  truncated: boolean; // the input exceeded the token budget
}

export interface Backend {
  readonly id: string;
  readonly dim: number;
  encodeBatch(texts: string[], maxTokens: number): Promise<EncodedText[]>;
}

/** The model or its runtime cannot be loaded in this environment. */
export class EnvironmentError extends Error {}

const HASH_ID = /^hash(?:-(\d+))?$/;
const DEFAULT_HASH_DIM = 64;

export function hashTokens(text: string): string[] {
  return text.toLowerCase().split(/[^a-z0-9']+/).filter((t) => t.length > 0);
}

function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/**
 * Deterministic stand-in encoder: each word maps to a fixed pseudo-random
 * vector seeded by its hash, so identical texts encode identically and
 * texts sharing words land closer in cosine than disjoint ones.  No
 * network, no weights, stable across runs and platforms.
 */
export class HashBackend implements Backend {
  readonly id: string;
  readonly dim: number;
  private cache = new Map<string, Float32Array>();

  constructor(dim: number = DEFAULT_HASH_DIM) {
    if (!Number.isInteger(dim) || dim < 1) {
      throw new EnvironmentError(`hash backend dimension must be >= 1, got ${dim}`);
    }
    this.id = dim === DEFAULT_HASH_DIM ? "hash" : `hash-${dim}`;
    this.dim = dim;
  }

  private tokenVector(token: string): Float32Array {
    let vec = this.cache.get(token);
    if (!vec) {
      const rand = mulberry32(fnv1a(token));
      vec = new Float32Array(this.dim);
      for (let j = 0; j < this.dim; j++) {
        vec[j] = rand() * 2 - 1;
      }
      this.cache.set(token, vec);
    }
    return vec;
  }

  encodeBatch(texts: string[], maxTokens: number): Promise<EncodedText[]> {
    const out = texts.map((text) => {
      const tokens = hashTokens(text);
      const truncated = tokens.length > maxTokens;
      const kept = truncated ? tokens.slice(0, maxTokens) : tokens;
      const states = new Float32Array(kept.length * this.dim);
      for (let t = 0; t < kept.length; t++) {
        states.set(this.tokenVector(kept[t]), t * this.dim);
      }
      return {
        states,
        mask: new Uint8Array(kept.length).fill(1),
        dim: this.dim,
        truncated,
      };
    });
    return Promise.resolve(out);
  }
}

/** Pretrained checkpoint served by transformers.js (loaded on demand). */
class TransformerBackend implements Backend {
  readonly id: string;
  readonly dim: number;
  private tokenizer: any;
  private model: any;

  private constructor(id: string, tokenizer: any, model: any, dim: number) {
    this.id = id;
    this.tokenizer = tokenizer;
    this.model = model;
    this.dim = dim;
  }

  static async load(modelId: string): Promise<TransformerBackend> {
    let transformers: any;
    try {
      // Resolved at runtime only; the package is optional and absent in
      // offline environments, so it must not be a compile-time dependency.
      const runtime = "@xenova/transformers";
      transformers = await import(runtime);
    } catch (err) {
      throw new EnvironmentError(
        `cannot load the transformers.js runtime for model '${modelId}': ` +
          `install @xenova/transformers or use the 'hash' backend (${err})`
      );
    }
    try {
      const tokenizer = await transformers.AutoTokenizer.from_pretrained(modelId);
      const model = await transformers.AutoModel.from_pretrained(modelId);
      const probe = await model(await tokenizer("probe", { return_tensors: true }));
      const dims = probe.last_hidden_state.dims;
      return new TransformerBackend(modelId, tokenizer, model, dims[dims.length - 1]);
    } catch (err) {
      throw new EnvironmentError(`cannot load model '${modelId}': ${err}`);
    }
  }

  async encodeBatch(texts: string[], maxTokens: number): Promise<EncodedText[]> {
    // Tokenize singly first to observe pre-truncation lengths, then run the
    // batch right-padded with truncation; the attention mask marks padding.
    const lengths = await Promise.all(
      texts.map(async (t) => (await this.tokenizer(t)).input_ids.dims[1] as number)
    );
    const inputs = await this.tokenizer(texts, {
      padding: true,
      truncation: true,
      max_length: maxTokens,
    });
    const output = await this.model(inputs);
    const hidden = output.last_hidden_state; // [batch, seq, dim]
    const [, seq, dim] = hidden.dims;
    const data: Float32Array = hidden.data;
    const maskData = inputs.attention_mask.data;
    return texts.map((_, i) => {
      const states = data.slice(i * seq * dim, (i + 1) * seq * dim);
      const mask = new Uint8Array(seq);
      for (let t = 0; t < seq; t++) {
        mask[t] = Number(maskData[i * seq + t]) ? 1 : 0;
      }
      return { states, mask, dim, truncated: lengths[i] > maxTokens };
    });
  }
}

export async function createBackend(modelId: string): Promise<Backend> {
  const hash = HASH_ID.exec(modelId);
  if (hash) {
    return new HashBackend(hash[1] ? Number(hash[1]) : DEFAULT_HASH_DIM);
  }
  return TransformerBackend.load(modelId);
}
