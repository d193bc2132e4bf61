/**
 * Feature export: embed every PNG under an input root with a registry
 * backbone and write the rows, in sorted filename order, to a FeatureSet
 * binary file that the Python toolkit reads directly.
 */
import * as tf from '@tensorflow/tfjs'
import { readdirSync, statSync } from 'fs'
import { join } from 'path'

import { loadBackbone } from './backbone'
import { FeatureSet, writeFeatureSet } from './fset'
import { decodeGrayPng, replicateChannels, resizeToFloat } from './preprocess'

export interface ExportJob {
  inputDir: string
  backboneId: string
  outPath: string
  batchSize: number
}

export function listPngsSorted(root: string): string[] {
  const out: string[] = []
  const walk = (dir: string) => {
    for (const name of readdirSync(dir).sort()) {
      const full = join(dir, name)
      if (statSync(full).isDirectory()) {
        walk(full)
      } else if (name.toLowerCase().endsWith('.png')) {
        out.push(full)
      }
    }
  }
  walk(root)
  return out.sort()
}

export async function exportFeatures(job: ExportJob): Promise<FeatureSet> {
  await tf.setBackend('cpu')
  const backbone = loadBackbone(job.backboneId)
  const paths = listPngsSorted(job.inputDir)
  if (paths.length === 0) {
    throw new Error(`no PNG images under ${job.inputDir}`)
  }
  const size = backbone.inputSize
  const rows: Float32Array[] = []
  for (let start = 0; start < paths.length; start += job.batchSize) {
    const batchPaths = paths.slice(start, start + job.batchSize)
    const batchData = new Float32Array(batchPaths.length * size * size * 3)
    batchPaths.forEach((path, i) => {
      let img
      try {
        img = decodeGrayPng(path)
      } catch (err) {
        throw new Error(`unreadable image ${path}: ${(err as Error).message}`)
      }
      batchData.set(replicateChannels(resizeToFloat(img, size, size)), i * size * size * 3)
    })
    const input = tf.tensor4d(batchData, [batchPaths.length, size, size, 3])
    const features = backbone.embed(input)
    const flat = (await features.data()) as Float32Array
    for (let i = 0; i < batchPaths.length; i++) {
      rows.push(flat.slice(i * backbone.featureDim, (i + 1) * backbone.featureDim))
    }
    input.dispose()
    features.dispose()
  }
  const data = new Float32Array(rows.length * backbone.featureDim)
  rows.forEach((row, i) => data.set(row, i * backbone.featureDim))
  const fs: FeatureSet = {
    data,
    n: rows.length,
    d: backbone.featureDim,
    extractorId: backbone.id,
  }
  writeFeatureSet(fs, job.outPath)
  return fs
}
