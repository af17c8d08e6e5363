/**
 * The nn2c interchange format: a strict JSON manifest plus a raw blob of
 * little-endian float32 parameters (per layer, weights before biases).
 * Field set and byte layout are normative; the compiler rejects anything
 * it does not recognize.
 */

import { createHash } from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

export type Activation = "linear" | "relu" | "sigmoid" | "tanh";

export type LayerDescriptor =
  | { kind: "dense"; activation: Activation; units: number }
  | {
      kind: "conv2d";
      activation: Activation;
      kernel: [number, number];
      stride: [number, number];
      filters: number;
    }
  | { kind: "avgpool2d"; window: [number, number]; stride: [number, number] }
  | { kind: "maxpool2d"; window: [number, number]; stride: [number, number] }
  | { kind: "flatten" };

export interface ModelManifest {
  format_version: 1;
  name: string;
  input_shape: number[];
  layers: LayerDescriptor[];
  weights_file: string;
  weights_checksum: string;
}

export interface ExportResult {
  manifestBytes: Buffer;
  weightsBlob: Buffer;
  /** Parameter count carried by the blob (blob bytes / 4). */
  parameterCount: number;
}

export function sha256Hex(data: Buffer): string {
  return createHash("sha256").update(data).digest("hex");
}

export function buildManifest(
  name: string,
  inputShape: number[],
  layers: LayerDescriptor[],
  weightsFile: string,
  weightsBlob: Buffer,
): Buffer {
  const manifest: ModelManifest = {
    format_version: 1,
    name,
    input_shape: inputShape,
    layers,
    weights_file: weightsFile,
    weights_checksum: sha256Hex(weightsBlob),
  };
  return Buffer.from(JSON.stringify(manifest, null, 2) + "\n", "utf-8");
}

/** Write `<name>.json` and `<name>.bin` into `outDir`; returns their paths. */
export function writeModelFiles(
  outDir: string,
  name: string,
  result: ExportResult,
): { manifestPath: string; weightsPath: string } {
  fs.mkdirSync(outDir, { recursive: true });
  const manifestPath = path.join(outDir, `${name}.json`);
  const weightsPath = path.join(outDir, `${name}.bin`);
  fs.writeFileSync(manifestPath, result.manifestBytes);
  fs.writeFileSync(weightsPath, result.weightsBlob);
  return { manifestPath, weightsPath };
}
