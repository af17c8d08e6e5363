/**
 * Minimal reader for TensorFlow.js layers-model directories
 * (`model.json` plus binary weight shards). Only what the exporter needs:
 * the sequential layer list and the named weight tensors, with their
 * storage order and shapes preserved.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export interface WeightSpec {
  name: string;
  shape: number[];
  dtype: string;
}

export interface LayerConfig {
  class_name: string;
  config: Record<string, unknown>;
}

export interface LoadedModel {
  name: string;
  layers: LayerConfig[];
  /** Tensor name -> (shape, float32 data), in shard storage order. */
  tensors: Map<string, { shape: number[]; data: Float32Array }>;
}

interface ModelJson {
  modelTopology?: {
    class_name?: string;
    config?: { name?: string; layers?: LayerConfig[] };
    model_config?: { class_name?: string; config?: { name?: string; layers?: LayerConfig[] } };
  };
  weightsManifest?: Array<{ paths: string[]; weights: WeightSpec[] }>;
}

export class ModelFormatError extends Error {}

export class NonSequentialTopology extends Error {}

function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function loadLayersModel(modelPath: string): LoadedModel {
  let dir = modelPath;
  let jsonPath = modelPath;
  if (fs.statSync(modelPath).isDirectory()) {
    jsonPath = path.join(modelPath, "model.json");
  } else {
    dir = path.dirname(modelPath);
  }
  const doc = JSON.parse(fs.readFileSync(jsonPath, "utf-8")) as ModelJson;

  const topology = doc.modelTopology;
  if (!topology) {
    throw new ModelFormatError(`${jsonPath}: missing modelTopology`);
  }
  // Keras HDF5 conversions nest the graph under model_config.
  const graph = topology.model_config ?? topology;
  if (graph.class_name !== "Sequential") {
    throw new NonSequentialTopology(
      `model topology is ${graph.class_name ?? "unknown"}; only Sequential models export`,
    );
  }
  const layers = graph.config?.layers;
  if (!layers || layers.length === 0) {
    throw new ModelFormatError(`${jsonPath}: topology has no layers`);
  }

  const manifest = doc.weightsManifest;
  if (!manifest || manifest.length === 0) {
    throw new ModelFormatError(`${jsonPath}: missing weightsManifest`);
  }

  const tensors = new Map<string, { shape: number[]; data: Float32Array }>();
  for (const group of manifest) {
    const shard = Buffer.concat(
      group.paths.map((p) => fs.readFileSync(path.join(dir, p))),
    );
    let offset = 0;
    for (const spec of group.weights) {
      if (spec.dtype !== "float32") {
        throw new ModelFormatError(`tensor ${spec.name}: dtype ${spec.dtype} is not float32`);
      }
      const bytes = 4 * elementCount(spec.shape);
      if (offset + bytes > shard.length) {
        throw new ModelFormatError(`tensor ${spec.name}: weight shard is truncated`);
      }
      // Round-trip through a fresh buffer so alignment is guaranteed.
      const data = new Float32Array(bytes / 4);
      new Uint8Array(data.buffer).set(shard.subarray(offset, offset + bytes));
      tensors.set(spec.name, { shape: spec.shape, data });
      offset += bytes;
    }
    if (offset !== shard.length) {
      throw new ModelFormatError(
        `weight shard holds ${shard.length} bytes but the manifest describes ${offset}`,
      );
    }
  }

  return { name: graph.config?.name ?? "model", layers, tensors };
}
