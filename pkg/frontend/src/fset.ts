/**
 * FeatureSet binary format shared with the Python evaluation toolkit.
 *
 * Layout: magic "FSET" | u32 LE version | u64 LE n | u64 LE d
 *         | u32 LE id length | extractor id UTF-8
 *         | n*d IEEE-754 float32 LE, row-major.
 */
import { readFileSync, writeFileSync } from 'fs'

export const FSET_MAGIC = 'FSET'
export const FSET_VERSION = 1

export interface FeatureSet {
  /** one row per image, row-major */
  data: Float32Array
  n: number
  d: number
  extractorId: string
}

export function encodeFeatureSet(fs: FeatureSet): Buffer {
  if (fs.data.length !== fs.n * fs.d) {
    throw new Error(`data length ${fs.data.length} != n*d = ${fs.n * fs.d}`)
  }
  const id = Buffer.from(fs.extractorId, 'utf-8')
  const header = Buffer.alloc(4 + 4 + 8 + 8 + 4)
  header.write(FSET_MAGIC, 0, 'ascii')
  header.writeUInt32LE(FSET_VERSION, 4)
  header.writeBigUInt64LE(BigInt(fs.n), 8)
  header.writeBigUInt64LE(BigInt(fs.d), 16)
  header.writeUInt32LE(id.length, 24)
  const payload = Buffer.from(fs.data.buffer, fs.data.byteOffset, fs.data.byteLength)
  return Buffer.concat([header, id, payload])
}

export function decodeFeatureSet(buf: Buffer): FeatureSet {
  if (buf.length < 28 || buf.toString('ascii', 0, 4) !== FSET_MAGIC) {
    throw new Error(`bad magic at offset 0`)
  }
  const version = buf.readUInt32LE(4)
  if (version !== FSET_VERSION) {
    throw new Error(`unsupported format version ${version}`)
  }
  const n = Number(buf.readBigUInt64LE(8))
  const d = Number(buf.readBigUInt64LE(16))
  const idLen = buf.readUInt32LE(24)
  if (buf.length < 28 + idLen) {
    throw new Error(`truncated extractor id at offset 28`)
  }
  const extractorId = buf.toString('utf-8', 28, 28 + idLen)
  const start = 28 + idLen
  if (buf.length - start < n * d * 4) {
    throw new Error(`truncated payload at offset ${start}`)
  }
  const data = new Float32Array(n * d)
  for (let i = 0; i < n * d; i++) {
    data[i] = buf.readFloatLE(start + i * 4)
  }
  return { data, n, d, extractorId }
}

export function writeFeatureSet(fs: FeatureSet, path: string): void {
  writeFileSync(path, encodeFeatureSet(fs))
}

export function readFeatureSet(path: string): FeatureSet {
  return decodeFeatureSet(readFileSync(path))
}
