// Invoke forms are generated from operation signatures; nothing about
// any concrete operation is hardcoded here.

import type { FieldSpec, OperationInfo } from "./types.js";
import type { ParamText } from "./envelope.js";

export interface FieldModel {
  name: string;
  kind: FieldSpec["kind"];
  input: "number" | "text" | "checkbox" | "file";
  step?: string;
  placeholder?: string;
}

export function formFields(op: OperationInfo): FieldModel[] {
  return op.params.map((p) => {
    switch (p.kind) {
      case "int":
        return { name: p.name, kind: p.kind, input: "number", step: "1", placeholder: "integer" };
      case "float":
        return { name: p.name, kind: p.kind, input: "number", step: "any", placeholder: "number" };
      case "bool":
        return { name: p.name, kind: p.kind, input: "checkbox" };
      case "bytes":
        return { name: p.name, kind: p.kind, input: "file" };
      default:
        return { name: p.name, kind: "text", input: "text" };
    }
  });
}

// Raw form values keyed by param name: strings for number/text inputs,
// booleans for checkboxes, base64 strings for file inputs.
export type FormValues = Record<string, string | boolean>;

export function toParams(op: OperationInfo, values: FormValues): ParamText[] {
  return op.params.map((spec) => {
    const raw = values[spec.name];
    return { name: spec.name, kind: spec.kind, text: renderValue(spec, raw) };
  });
}

function renderValue(spec: FieldSpec, raw: string | boolean | undefined): string {
  switch (spec.kind) {
    case "bool":
      return raw === true || raw === "true" ? "true" : "false";
    case "int": {
      const text = String(raw ?? "").trim();
      if (!/^[+-]?\d+$/.test(text)) throw new Error(`${spec.name}: expected an integer`);
      return text;
    }
    case "float": {
      const text = String(raw ?? "").trim();
      if (text === "" || Number.isNaN(Number(text))) {
        throw new Error(`${spec.name}: expected a number`);
      }
      return text;
    }
    case "bytes": {
      const text = String(raw ?? "");
      if (!/^[A-Za-z0-9+/]*={0,2}$/.test(text) || text.length % 4 !== 0) {
        throw new Error(`${spec.name}: attach a file`);
      }
      return text;
    }
    default:
      return String(raw ?? "");
  }
}

export function bytesToBase64(bytes: Uint8Array): string {
  let binary = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}

export function base64ToBytes(text: string): Uint8Array {
  const binary = atob(text);
  const out = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) out[i] = binary.charCodeAt(i);
  return out;
}
