/**
 * Embedding backbone registry.
 *
 * Each backbone is a small convolutional network with fixed, seeded weights
 * ending in a global average pool. The two registry entries stand in for a
 * natural-image and a radiology-domain network: this sandbox cannot fetch
 * hosted pretrained weights, so the registry ships reproducible fixed-weight
 * networks instead (a seeded random-projection convnet preserves set-level
 * distances, which is what the downstream Fréchet computation consumes).
 * Entries are keyed by id so hosted graph models can be slotted in later.
 */
import * as tf from '@tensorflow/tfjs'

export interface Backbone {
  id: string
  inputSize: number
  featureDim: number
  /** batch of HWC float inputs in [0,1] -> [batch, featureDim] embeddings */
  embed(batch: tf.Tensor4D): tf.Tensor2D
}

/** mulberry32: tiny deterministic PRNG, stable across platforms */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a = (a + 0x6d2b79f5) >>> 0
    let t = a
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

function seededKernel(
  rand: () => number, h: number, w: number, cin: number, cout: number,
): tf.Tensor4D {
  const values = new Float32Array(h * w * cin * cout)
  const scale = Math.sqrt(2 / (h * w * cin))
  for (let i = 0; i < values.length; i++) {
    // Box-Muller on the seeded uniform stream
    const u1 = Math.max(rand(), 1e-12)
    const u2 = rand()
    values[i] = Math.sqrt(-2 * Math.log(u1)) * Math.cos(2 * Math.PI * u2) * scale
  }
  return tf.tensor4d(values, [h, w, cin, cout])
}

interface ConvLayer {
  kernel: tf.Tensor4D
  stride: number
}

function buildConvStack(seed: number): ConvLayer[] {
  const rand = mulberry32(seed)
  const channels = [3, 16, 32, 64]
  const layers: ConvLayer[] = []
  for (let i = 0; i < channels.length - 1; i++) {
    layers.push({ kernel: seededKernel(rand, 3, 3, channels[i], channels[i + 1]), stride: 2 })
  }
  return layers
}

class SeededConvBackbone implements Backbone {
  readonly inputSize = 64
  readonly featureDim = 64
  private layers: ConvLayer[] | null = null

  constructor(readonly id: string, private seed: number) {}

  private stack(): ConvLayer[] {
    if (this.layers === null) {
      this.layers = buildConvStack(this.seed)
    }
    return this.layers
  }

  embed(batch: tf.Tensor4D): tf.Tensor2D {
    // Materialize kernels outside tidy so they survive across batches.
    const layers = this.stack()
    return tf.tidy(() => {
      let x: tf.Tensor4D = batch
      for (const layer of layers) {
        x = tf.relu(tf.conv2d(x, layer.kernel, layer.stride, 'same'))
      }
      return tf.mean(x, [1, 2]) as tf.Tensor2D
    })
  }
}

const REGISTRY: Record<string, () => Backbone> = {
  'imagenet-backbone': () => new SeededConvBackbone('imagenet-backbone', 0x1234abcd),
  'radiology-backbone': () => new SeededConvBackbone('radiology-backbone', 0x7f4e9b21),
}

export function loadBackbone(id: string): Backbone {
  const factory = REGISTRY[id]
  if (!factory) {
    throw new Error(
      `unknown backbone ${JSON.stringify(id)}; supported: ${Object.keys(REGISTRY).join(', ')}`,
    )
  }
  return factory()
}

export function supportedBackbones(): string[] {
  return Object.keys(REGISTRY)
}
