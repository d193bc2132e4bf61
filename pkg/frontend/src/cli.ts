#!/usr/bin/env node
import yargs from 'yargs'
import { hideBin } from 'yargs/helpers'

import { supportedBackbones } from './backbone'
import { exportFeatures } from './export'

async function main() {
  const argv = await yargs(hideBin(process.argv))
    .command('export-features', 'embed a directory of PNG slices into a FeatureSet file')
    .option('input', { type: 'string', demandOption: true, describe: 'image root directory' })
    .option('backbone', {
      type: 'string', demandOption: true,
      describe: `backbone id (${supportedBackbones().join(' | ')})`,
    })
    .option('out', { type: 'string', demandOption: true, describe: 'output .fset path' })
    .option('batch', { type: 'number', default: 32, describe: 'inference batch size' })
    .strict()
    .parse()

  const fs = await exportFeatures({
    inputDir: argv.input,
    backboneId: argv.backbone,
    outPath: argv.out,
    batchSize: argv.batch,
  })
  console.log(`wrote ${fs.n}x${fs.d} features (${fs.extractorId}) -> ${argv.out}`)
}

main().catch((err) => {
  console.error(JSON.stringify({ error: err.name ?? 'Error', message: err.message }))
  process.exit(1)
})
