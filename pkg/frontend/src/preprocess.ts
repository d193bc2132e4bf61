/**
 * Deterministic image preprocessing for backbone inference: grayscale PNG
 * decode, bilinear resize to the backbone's native input, and replication
 * of the single channel into 3 channels.
 */
import { readFileSync } from 'fs'
import { PNG } from 'pngjs'

export interface GrayImage {
  width: number
  height: number
  /** row-major intensities in [0, 255] */
  pixels: Uint8Array
}

export function decodeGrayPng(path: string): GrayImage {
  const png = PNG.sync.read(readFileSync(path))
  const { width, height, data } = png
  const pixels = new Uint8Array(width * height)
  for (let i = 0; i < width * height; i++) {
    const r = data[4 * i]
    const g = data[4 * i + 1]
    const b = data[4 * i + 2]
    if (r !== g || r !== b) {
      throw new Error(`${path}: color image rejected; channels differ at pixel ${i}`)
    }
    pixels[i] = r
  }
  return { width, height, pixels }
}

/** Bilinear resize with half-pixel-centered sampling, output in [0, 1]. */
export function resizeToFloat(img: GrayImage, targetW: number, targetH: number): Float32Array {
  const out = new Float32Array(targetW * targetH)
  const scaleX = img.width / targetW
  const scaleY = img.height / targetH
  for (let y = 0; y < targetH; y++) {
    let sy = (y + 0.5) * scaleY - 0.5
    sy = Math.min(Math.max(sy, 0), img.height - 1)
    const y0 = Math.floor(sy)
    const y1 = Math.min(y0 + 1, img.height - 1)
    const wy = sy - y0
    for (let x = 0; x < targetW; x++) {
      let sx = (x + 0.5) * scaleX - 0.5
      sx = Math.min(Math.max(sx, 0), img.width - 1)
      const x0 = Math.floor(sx)
      const x1 = Math.min(x0 + 1, img.width - 1)
      const wx = sx - x0
      const top = img.pixels[y0 * img.width + x0] * (1 - wx)
        + img.pixels[y0 * img.width + x1] * wx
      const bot = img.pixels[y1 * img.width + x0] * (1 - wx)
        + img.pixels[y1 * img.width + x1] * wx
      out[y * targetW + x] = (top * (1 - wy) + bot * wy) / 255
    }
  }
  return out
}

/** Replicate one gray channel into 3, HWC layout. */
export function replicateChannels(gray: Float32Array): Float32Array {
  const out = new Float32Array(gray.length * 3)
  for (let i = 0; i < gray.length; i++) {
    out[3 * i] = gray[i]
    out[3 * i + 1] = gray[i]
    out[3 * i + 2] = gray[i]
  }
  return out
}
