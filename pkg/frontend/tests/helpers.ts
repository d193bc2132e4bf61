import { writeFileSync } from 'fs'
import { join } from 'path'
import { PNG } from 'pngjs'

/** Deterministic PRNG so fixture images are stable between runs. */
export function makeRng(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a = (a + 0x6d2b79f5) >>> 0
    let t = a
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

export function writeGrayPng(
  dir: string, name: string, width: number, height: number,
  value: (x: number, y: number) => number,
): string {
  const png = new PNG({ width, height })
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const v = Math.max(0, Math.min(255, Math.round(value(x, y))))
      const i = 4 * (y * width + x)
      png.data[i] = v
      png.data[i + 1] = v
      png.data[i + 2] = v
      png.data[i + 3] = 255
    }
  }
  const path = join(dir, name)
  writeFileSync(path, PNG.sync.write(png))
  return path
}

/** Smooth bright-ish slices: one visual family for sign-check fixtures. */
export function writeBrightSet(dir: string, count: number, seed: number): void {
  const rng = makeRng(seed)
  for (let i = 0; i < count; i++) {
    const cx = 16 + rng() * 32
    const cy = 16 + rng() * 32
    writeGrayPng(dir, `case${String(i).padStart(3, '0')}_DCE_P1_0000.png`, 64, 64,
      (x, y) => 180 + 40 * Math.exp(-((x - cx) ** 2 + (y - cy) ** 2) / 200) + rng() * 8)
  }
}

/** Dark low-contrast slices: visibly different from the bright family. */
export function writeDarkSet(dir: string, count: number, seed: number): void {
  const rng = makeRng(seed)
  for (let i = 0; i < count; i++) {
    writeGrayPng(dir, `case${String(i).padStart(3, '0')}_DCE_P1_0000.png`, 64, 64,
      (x, y) => 30 + 10 * Math.sin(x / 9) * Math.cos(y / 7) + rng() * 8)
  }
}
