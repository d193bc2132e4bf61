import { mkdtempSync, rmSync } from 'fs'
import { tmpdir } from 'os'
import { join } from 'path'
import { afterAll, describe, expect, it } from 'vitest'

import { decodeGrayPng, replicateChannels, resizeToFloat } from '../src/preprocess'
import { writeGrayPng } from './helpers'

const dir = mkdtempSync(join(tmpdir(), 'preprocess-'))
afterAll(() => rmSync(dir, { recursive: true, force: true }))

describe('decodeGrayPng', () => {
  it('reads back the written intensities', () => {
    const path = writeGrayPng(dir, 'ramp.png', 16, 8, (x, y) => x * 16 + y)
    const img = decodeGrayPng(path)
    expect(img.width).toBe(16)
    expect(img.height).toBe(8)
    expect(img.pixels[0]).toBe(0)
    expect(img.pixels[7 * 16 + 15]).toBe(247)
  })
})

describe('resizeToFloat', () => {
  it('is the identity (scaled to [0,1]) at matching size', () => {
    const path = writeGrayPng(dir, 'ident.png', 12, 12, (x, y) => (x * 7 + y * 13) % 256)
    const img = decodeGrayPng(path)
    const out = resizeToFloat(img, 12, 12)
    for (let i = 0; i < out.length; i++) {
      expect(out[i]).toBeCloseTo(img.pixels[i] / 255, 6)
    }
  })

  it('preserves a constant image at any size', () => {
    const path = writeGrayPng(dir, 'const.png', 9, 5, () => 200)
    const out = resizeToFloat(decodeGrayPng(path), 64, 64)
    for (const v of out) {
      expect(v).toBeCloseTo(200 / 255, 6)
    }
  })

  it('keeps values inside the input range', () => {
    const path = writeGrayPng(dir, 'wave.png', 31, 17, (x, y) => 40 + 150 * Math.abs(Math.sin(x * y)))
    const out = resizeToFloat(decodeGrayPng(path), 64, 64)
    for (const v of out) {
      expect(v).toBeGreaterThanOrEqual(40 / 255 - 1e-6)
      expect(v).toBeLessThanOrEqual(190 / 255 + 1e-6)
    }
  })
})

describe('replicateChannels', () => {
  it('copies the gray plane into all three channels', () => {
    const gray = new Float32Array([0.25, 0.5, 0.75])
    const rgb = replicateChannels(gray)
    expect(Array.from(rgb)).toEqual([0.25, 0.25, 0.25, 0.5, 0.5, 0.5, 0.75, 0.75, 0.75])
  })
})
