/*
 * Pooling turns per-token hidden states into one sentence vector.  The mask
 * marks real tokens; padded positions are excluded from means so batching
 * with right-padding cannot corrupt the embedding.
 */

export type Pooling = "cls" | "mean_tokens" | "encoder_last_mean";

export const POOLINGS: readonly Pooling[] = [
  "cls",
  "mean_tokens",
  "encoder_last_mean",
];

export function isPooling(value: string): value is Pooling {
  return (POOLINGS as readonly string[]).includes(value);
}

/**
 * Pick the conventional pooling for a model family from its identifier:
 * first-token state for contrastively trained sentence encoders, mean over
 * encoder states for encoder-decoder models, mean over token states
 * otherwise.
 */
export function defaultPooling(modelId: string): Pooling {
  const id = modelId.toLowerCase();
  if (id.includes("simcse") || id.includes("sentence")) {
    return "cls";
  }
  if (/\b(m?t5|bart|pegasus)\b|flan/.test(id)) {
    return "encoder_last_mean";
  }
  return "mean_tokens";
}

/**
 * Pool a T x dim block of token states into one vector of length dim.
 *
 * `mask.length` gives T; states must hold exactly T * dim values.  With no
 * real tokens (empty input) the result is the zero vector.
 */
export function poolStates(
  states: Float32Array,
  mask: ArrayLike<number>,
  dim: number,
  mode: Pooling
): Float32Array {
  const seq = mask.length;
  if (states.length !== seq * dim) {
    throw new RangeError(
      `states length ${states.length} does not match ${seq} tokens x ${dim} dims`
    );
  }
  const out = new Float32Array(dim);
  if (mode === "cls") {
    if (seq > 0 && mask[0]) {
      out.set(states.subarray(0, dim));
    }
    return out;
  }
  // mean_tokens and encoder_last_mean share the masked mean; they differ in
  // which hidden states the backend feeds in, not in the arithmetic.
  let count = 0;
  const sum = new Float64Array(dim);
  for (let t = 0; t < seq; t++) {
    if (!mask[t]) continue;
    count++;
    const base = t * dim;
    for (let j = 0; j < dim; j++) {
      sum[j] += states[base + j];
    }
  }
  if (count > 0) {
    for (let j = 0; j < dim; j++) {
      out[j] = sum[j] / count;
    }
  }
  return out;
}
