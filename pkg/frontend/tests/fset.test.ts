import { describe, expect, it } from 'vitest'

import { decodeFeatureSet, encodeFeatureSet, FeatureSet } from '../src/fset'

function sampleSet(): FeatureSet {
  const data = new Float32Array([1.5, -2.25, 0, 42, 3.125, -0.5])
  return { data, n: 2, d: 3, extractorId: 'imagenet-backbone' }
}

describe('FeatureSet binary format', () => {
  it('round-trips bit-identically', () => {
    const fs = sampleSet()
    const buf = encodeFeatureSet(fs)
    const back = decodeFeatureSet(buf)
    expect(back.n).toBe(2)
    expect(back.d).toBe(3)
    expect(back.extractorId).toBe('imagenet-backbone')
    expect(Array.from(back.data)).toEqual(Array.from(fs.data))
    expect(encodeFeatureSet(back).equals(buf)).toBe(true)
  })

  it('has the documented header layout', () => {
    const buf = encodeFeatureSet(sampleSet())
    expect(buf.toString('ascii', 0, 4)).toBe('FSET')
    expect(buf.readUInt32LE(4)).toBe(1)
    expect(Number(buf.readBigUInt64LE(8))).toBe(2)
    expect(Number(buf.readBigUInt64LE(16))).toBe(3)
  })

  it('rejects a bad magic', () => {
    const buf = encodeFeatureSet(sampleSet())
    buf.write('XXXX', 0, 'ascii')
    expect(() => decodeFeatureSet(buf)).toThrow(/bad magic/)
  })

  it('rejects a truncated payload', () => {
    const buf = encodeFeatureSet(sampleSet())
    expect(() => decodeFeatureSet(buf.subarray(0, buf.length - 4))).toThrow(/truncated/)
  })

  it('rejects a mismatched data length', () => {
    expect(() =>
      encodeFeatureSet({ data: new Float32Array(5), n: 2, d: 3, extractorId: 'x' }),
    ).toThrow(/n\*d/)
  })
})
