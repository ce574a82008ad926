/** Schema-driven form generation.
 *
 * Forms are generated from the live ArgumentSchema: every parameter appears
 * exactly once, required parameters render as required fields, and submit
 * stays disabled until client-side validation passes.
 */

import type { ParameterSpec, ToolCard } from "./types.js";

export type Widget = "text" | "number" | "checkbox" | "select" | "textarea";

export interface FormField {
  name: string;
  label: string;
  widget: Widget;
  required: boolean;
  description: string;
  paramType: ParameterSpec["type"];
  options?: (string | number)[];
  minimum?: number;
  maximum?: number;
  placeholder?: string;
}

export interface FieldResult {
  ok: boolean;
  value?: unknown;
  error?: string;
  /** present=false means the field was left blank (fine unless required) */
  present: boolean;
}

function widgetFor(spec: ParameterSpec): Widget {
  if (spec.enum && spec.enum.length > 0) return "select";
  switch (spec.type) {
    case "boolean":
      return "checkbox";
    case "integer":
    case "number":
      return "number";
    case "string-list":
      return "textarea";
    default:
      return "text";
  }
}

export function buildFormModel(tool: ToolCard): FormField[] {
  return tool.arguments.map((spec) => ({
    name: spec.name,
    label: spec.name + (spec.required ? " *" : ""),
    widget: widgetFor(spec),
    required: spec.required,
    description: spec.description ?? "",
    paramType: spec.type,
    options: spec.enum,
    minimum: spec.minimum,
    maximum: spec.maximum,
    placeholder:
      spec.type === "string-list" ? "one item per line" : spec.type === "file-reference" ? "path or URI" : undefined,
  }));
}

/** Parse one field's raw text into the JSON value the service expects. */
export function parseFieldValue(field: FormField, raw: string | boolean): FieldResult {
  if (field.widget === "checkbox") {
    return { ok: true, value: raw === true, present: true };
  }
  const text = String(raw ?? "").trim();
  if (text === "") {
    if (field.required) return { ok: false, error: "required", present: false };
    return { ok: true, present: false };
  }
  switch (field.paramType) {
    case "integer": {
      if (!/^[+-]?\d+$/.test(text)) return { ok: false, error: "must be an integer", present: true };
      const value = parseInt(text, 10);
      return checkRange(field, value);
    }
    case "number": {
      const value = Number(text);
      if (Number.isNaN(value)) return { ok: false, error: "must be a number", present: true };
      return checkRange(field, value);
    }
    case "string-list": {
      const items = String(raw)
        .split("\n")
        .map((line) => line.trim())
        .filter((line) => line !== "");
      if (field.required && items.length === 0) return { ok: false, error: "required", present: false };
      return { ok: true, value: items, present: true };
    }
    default: {
      if (field.options && !field.options.map(String).includes(text)) {
        return { ok: false, error: `must be one of: ${field.options.join(", ")}`, present: true };
      }
      return { ok: true, value: text, present: true };
    }
  }
}

function checkRange(field: FormField, value: number): FieldResult {
  if (field.options && !field.options.includes(value)) {
    return { ok: false, error: `must be one of: ${field.options.join(", ")}`, present: true };
  }
  if (field.minimum !== undefined && value < field.minimum) {
    return { ok: false, error: `minimum is ${field.minimum}`, present: true };
  }
  if (field.maximum !== undefined && value > field.maximum) {
    return { ok: false, error: `maximum is ${field.maximum}`, present: true };
  }
  return { ok: true, value, present: true };
}

export interface CollectedForm {
  args: Record<string, unknown>;
  errors: Record<string, string>;
  complete: boolean;
}

/** Assemble the argument map from raw form values; complete=false disables submit. */
export function collectForm(fields: FormField[], values: Record<string, string | boolean>): CollectedForm {
  const args: Record<string, unknown> = {};
  const errors: Record<string, string> = {};
  for (const field of fields) {
    const result = parseFieldValue(field, values[field.name] ?? "");
    if (!result.ok) {
      errors[field.name] = result.error ?? "invalid";
    } else if (result.present) {
      args[field.name] = result.value;
    }
  }
  return { args, errors, complete: Object.keys(errors).length === 0 };
}
