/**
 * Convert a loaded TensorFlow.js sequential model into the nn2c
 * interchange format.
 *
 * Weight layout needs no reordering: tfjs dense kernels are already
 * row-major [input][output] and conv kernels [kh][kw][in_ch][out_ch],
 * exactly the normative interchange layout, so tensor data is copied
 * verbatim (and the test suite pins that with an asymmetric kernel).
 * Export is strict: any layer, activation, padding, or option outside the
 * compiler's reach fails the export rather than being skipped.
 */

import { Activation, buildManifest, ExportResult, LayerDescriptor } from "./interchange.js";
import { LayerConfig, LoadedModel } from "./layersModel.js";

export class UnsupportedLayer extends Error {}

export class UnsupportedActivation extends Error {}

const ACTIVATIONS: ReadonlySet<string> = new Set(["linear", "relu", "sigmoid", "tanh"]);

interface Converted {
  descriptor: LayerDescriptor;
  /** Tensor names to append to the blob, in order (kernel then bias). */
  tensorNames: string[];
}

function describe(layer: LayerConfig): string {
  const name = layer.config["name"];
  return `${layer.class_name}(${typeof name === "string" ? name : "?"})`;
}

function activationOf(layer: LayerConfig): Activation {
  const value = layer.config["activation"] ?? "linear";
  if (typeof value !== "string" || !ACTIVATIONS.has(value)) {
    throw new UnsupportedActivation(
      `${describe(layer)}: activation ${String(value)} is not one of linear/relu/sigmoid/tanh`,
    );
  }
  return value as Activation;
}

function pair(value: unknown, what: string): [number, number] {
  if (typeof value === "number") {
    return [value, value];
  }
  if (Array.isArray(value) && value.length === 2) {
    return [Number(value[0]), Number(value[1])];
  }
  throw new UnsupportedLayer(`${what} must be an integer pair, got ${JSON.stringify(value)}`);
}

function requireValidPadding(layer: LayerConfig): void {
  const padding = layer.config["padding"] ?? "valid";
  if (padding !== "valid") {
    throw new UnsupportedLayer(`${describe(layer)}: only valid padding is supported`);
  }
}

function requireChannelsLast(layer: LayerConfig): void {
  const fmt = layer.config["data_format"] ?? "channels_last";
  if (fmt !== "channels_last" && fmt !== null) {
    throw new UnsupportedLayer(`${describe(layer)}: data_format must be channels_last`);
  }
}

function weightName(layer: LayerConfig, suffix: "kernel" | "bias"): string {
  const name = layer.config["name"];
  if (typeof name !== "string") {
    throw new UnsupportedLayer(`${describe(layer)}: layer has no name for weight lookup`);
  }
  return `${name}/${suffix}`;
}

function convertLayer(layer: LayerConfig): Converted | null {
  switch (layer.class_name) {
    case "InputLayer":
      return null; // shape handled separately
    case "Dense": {
      if (layer.config["use_bias"] === false) {
        throw new UnsupportedLayer(
          `${describe(layer)}: dense without bias cannot round-trip the parameter count`,
        );
      }
      return {
        descriptor: {
          kind: "dense",
          activation: activationOf(layer),
          units: Number(layer.config["units"]),
        },
        tensorNames: [weightName(layer, "kernel"), weightName(layer, "bias")],
      };
    }
    case "Conv2D": {
      requireValidPadding(layer);
      requireChannelsLast(layer);
      if (layer.config["use_bias"] === false) {
        throw new UnsupportedLayer(`${describe(layer)}: conv2d without bias is not supported`);
      }
      const dilation = layer.config["dilation_rate"];
      const [dh, dw] = dilation === undefined ? [1, 1] : pair(dilation, "dilation_rate");
      if (dh !== 1 || dw !== 1) {
        throw new UnsupportedLayer(`${describe(layer)}: dilation is not supported`);
      }
      return {
        descriptor: {
          kind: "conv2d",
          activation: activationOf(layer),
          kernel: pair(layer.config["kernel_size"], "kernel_size"),
          stride: pair(layer.config["strides"] ?? 1, "strides"),
          filters: Number(layer.config["filters"]),
        },
        tensorNames: [weightName(layer, "kernel"), weightName(layer, "bias")],
      };
    }
    case "AveragePooling2D":
    case "MaxPooling2D": {
      requireValidPadding(layer);
      requireChannelsLast(layer);
      const window = pair(layer.config["pool_size"] ?? 2, "pool_size");
      const strideRaw = layer.config["strides"];
      const stride = strideRaw === null || strideRaw === undefined ? window : pair(strideRaw, "strides");
      return {
        descriptor: {
          kind: layer.class_name === "AveragePooling2D" ? "avgpool2d" : "maxpool2d",
          window,
          stride,
        },
        tensorNames: [],
      };
    }
    case "Flatten":
      requireChannelsLast(layer);
      return { descriptor: { kind: "flatten" }, tensorNames: [] };
    default:
      throw new UnsupportedLayer(`${describe(layer)}: layer kind is not supported`);
  }
}

function inputShapeOf(model: LoadedModel): number[] {
  for (const layer of model.layers) {
    const shape = layer.config["batch_input_shape"] ?? layer.config["batchInputShape"];
    if (Array.isArray(shape)) {
      const dims = shape.slice(1).map(Number);
      if (dims.length < 1 || dims.length > 3 || dims.some((d) => !Number.isInteger(d) || d < 1)) {
        throw new UnsupportedLayer(`input shape ${JSON.stringify(shape)} is outside rank 1-3`);
      }
      return dims;
    }
  }
  throw new UnsupportedLayer("model declares no batch_input_shape");
}

export interface ExportOptions {
  /** Manifest model name; defaults to the topology's name. */
  name?: string;
  /** weights_file value written into the manifest; defaults to `<name>.bin`. */
  weightsFile?: string;
}

export function exportModel(model: LoadedModel, options: ExportOptions = {}): ExportResult {
  const name = options.name ?? model.name;
  const inputShape = inputShapeOf(model);

  const descriptors: LayerDescriptor[] = [];
  const chunks: Buffer[] = [];
  let parameterCount = 0;
  for (const layer of model.layers) {
    const converted = convertLayer(layer);
    if (converted === null) {
      continue;
    }
    descriptors.push(converted.descriptor);
    for (const tensorName of converted.tensorNames) {
      const tensor = model.tensors.get(tensorName);
      if (!tensor) {
        throw new UnsupportedLayer(`${describe(layer)}: tensor ${tensorName} not in weights manifest`);
      }
      chunks.push(Buffer.from(tensor.data.buffer, tensor.data.byteOffset, tensor.data.byteLength));
      parameterCount += tensor.data.length;
    }
  }
  if (descriptors.length === 0) {
    throw new UnsupportedLayer("model has no exportable layers");
  }

  const weightsBlob = Buffer.concat(chunks);
  const manifestBytes = buildManifest(
    name,
    inputShape,
    descriptors,
    options.weightsFile ?? `${name}.bin`,
    weightsBlob,
  );
  return { manifestBytes, weightsBlob, parameterCount };
}
