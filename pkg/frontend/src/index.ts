/**
 * Dense-array bindings for the treecrf inference engine.
 *
 * A flat procedural API over row-major Float64 buffers: log partitions,
 * marginals, Viterbi/MBR head sequences, and constrained partitions.  All
 * shape and length validation happens here, before the engine is invoked;
 * the engine itself is reached through its score-file wire format and CLI,
 * so buffers are always copied, never aliased.  No state lives in this
 * layer: every call stages its own temp directory and tears it down.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Wire-format generation this binding speaks. */
export const WIRE_VERSION = "wire-v1";

/** Head sentinel for unannotated words in constraint vectors. */
export const UNKNOWN = -1;

export type RootPolicy = "single" | "multi";

export type DecodeMode = "viterbi" | "mbr";

/**
 * One sentence of scores: `arc` holds (n+1)*(n+1) values row-major
 * (head-major), `sib` optionally (n+1)^3 values (head, sibling, modifier).
 */
export interface DenseScoreView {
  n: number;
  arc: Float64Array | number[];
  sib?: Float64Array | number[];
}

export interface EngineOptions {
  /** Command prefix that reaches the engine CLI. */
  command?: string[];
}

export interface DecodedTree {
  heads: number[];
  score: number;
}

export interface MarginalBuffers {
  n: number;
  arc: Float64Array;
  sib?: Float64Array;
}

const DEFAULT_COMMAND = ["python3", "-m", "treecrf.cli"];

function validateBatch(batch: DenseScoreView[]): void {
  batch.forEach((view, index) => {
    if (!Number.isInteger(view.n) || view.n < 1) {
      throw new RangeError(
        `batch[${index}]: sentence length must be a positive integer, got ${view.n}`,
      );
    }
    const side = view.n + 1;
    if (view.arc.length !== side * side) {
      throw new RangeError(
        `batch[${index}]: arc buffer must hold ${side * side} values ` +
          `for n=${view.n}, got ${view.arc.length}`,
      );
    }
    if (view.sib !== undefined && view.sib.length !== side * side * side) {
      throw new RangeError(
        `batch[${index}]: sib buffer must hold ${side * side * side} values ` +
          `for n=${view.n}, got ${view.sib.length}`,
      );
    }
  });
}

function formatScoreFile(batch: DenseScoreView[]): string {
  const lines: string[] = [];
  batch.forEach((view, index) => {
    lines.push(`#${index} ${view.n} ${view.sib === undefined ? 0 : 1}`);
    lines.push(Array.from(view.arc, (v) => v.toString()).join(" "));
    if (view.sib !== undefined) {
      lines.push(Array.from(view.sib, (v) => v.toString()).join(" "));
    }
  });
  return lines.join("\n") + "\n";
}

function formatHeadsFile(constraints: number[][]): string {
  const lines: string[] = [];
  constraints.forEach((heads, index) => {
    lines.push(`#${index} ${heads.length}`);
    lines.push(heads.map((h) => (h === UNKNOWN ? "_" : h.toString())).join(" "));
  });
  return lines.join("\n") + "\n";
}

function runEngine(args: string[], options?: EngineOptions): string {
  const command = options?.command ?? DEFAULT_COMMAND;
  const proc = spawnSync(command[0], [...command.slice(1), ...args], {
    encoding: "utf-8",
  });
  if (proc.error) {
    throw new Error(`failed to launch engine: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    throw new Error(
      `engine exited with status ${proc.status}: ${proc.stderr.trim()}`,
    );
  }
  return proc.stdout;
}

function withTempDir<T>(body: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "treecrf-bind-"));
  try {
    return body(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function computeOp(
  op: string,
  batch: DenseScoreView[],
  rootPolicy: RootPolicy,
  options: EngineOptions | undefined,
  constraints?: number[][],
): string {
  return withTempDir((dir) => {
    const scores = join(dir, "scores.sc");
    const out = join(dir, "out.txt");
    writeFileSync(scores, formatScoreFile(batch));
    const args = [
      "compute",
      "--op",
      op,
      "--scores",
      scores,
      "--out",
      out,
      "--root-policy",
      rootPolicy,
    ];
    if (constraints !== undefined) {
      const heads = join(dir, "constraints.heads");
      writeFileSync(heads, formatHeadsFile(constraints));
      args.push("--constraints", heads);
    }
    runEngine(args, options);
    return readFileSync(out, "utf-8");
  });
}

/** The engine prints C-style "inf"/"-inf"/"nan"; parseFloat does not. */
function parseWireFloat(token: string): number {
  switch (token) {
    case "inf":
      return Number.POSITIVE_INFINITY;
    case "-inf":
      return Number.NEGATIVE_INFINITY;
    case "nan":
    case "-nan":
      return Number.NaN;
    default:
      return Number.parseFloat(token);
  }
}

function parseValueRecords(text: string, expected: number): number[] {
  const values: number[] = [];
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const [, value] = trimmed.split(/\s+/);
    values.push(parseWireFloat(value));
  }
  if (values.length !== expected) {
    throw new Error(`expected ${expected} value records, got ${values.length}`);
  }
  return values;
}

function parseHeadsRecords(text: string, expected: number): DecodedTree[] {
  const out: DecodedTree[] = [];
  let score = Number.NaN;
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    if (trimmed.startsWith("#")) {
      const parts = trimmed.slice(1).split(/\s+/);
      score = parseWireFloat(parts[2]);
      continue;
    }
    out.push({
      heads: trimmed.split(/\s+/).map((t) => Number.parseInt(t, 10)),
      score,
    });
  }
  if (out.length !== expected) {
    throw new Error(`expected ${expected} head records, got ${out.length}`);
  }
  return out;
}

function parseScoreRecords(text: string, expected: number): MarginalBuffers[] {
  const tokens = text.split(/\s+/).filter((t) => t.length > 0);
  const out: MarginalBuffers[] = [];
  let pos = 0;
  while (pos < tokens.length) {
    const header = tokens[pos];
    if (!header.startsWith("#")) {
      throw new Error(`expected record header, got ${header}`);
    }
    const n = Number.parseInt(tokens[pos + 1], 10);
    const hasSib = tokens[pos + 2] === "1";
    pos += 3;
    const side = n + 1;
    const arc = new Float64Array(side * side);
    for (let i = 0; i < arc.length; i += 1) {
      arc[i] = parseWireFloat(tokens[pos + i]);
    }
    pos += arc.length;
    let sib: Float64Array | undefined;
    if (hasSib) {
      sib = new Float64Array(side * side * side);
      for (let i = 0; i < sib.length; i += 1) {
        sib[i] = parseWireFloat(tokens[pos + i]);
      }
      pos += sib.length;
    }
    out.push({ n, arc, sib });
  }
  if (out.length !== expected) {
    throw new Error(`expected ${expected} score records, got ${out.length}`);
  }
  return out;
}

/** Engine version string, e.g. "treecrf 0.1.0 wire-v1". */
export function abiVersion(options?: EngineOptions): string {
  return runEngine(["--version"], options).trim();
}

/** Throws unless the engine speaks this binding's wire format. */
export function assertCompatible(options?: EngineOptions): void {
  const version = abiVersion(options);
  if (!version.endsWith(WIRE_VERSION)) {
    throw new Error(
      `engine reports "${version}" but this binding needs ${WIRE_VERSION}`,
    );
  }
}

/** Log partition per sentence (second order whenever `sib` is present). */
export function bindInside(
  batch: DenseScoreView[],
  rootPolicy: RootPolicy = "single",
  options?: EngineOptions,
): number[] {
  validateBatch(batch);
  if (batch.length === 0) return [];
  return parseValueRecords(
    computeOp("inside", batch, rootPolicy, options),
    batch.length,
  );
}

/**
 * Log partition restricted to trees containing the annotated arcs;
 * `constraints[b]` holds one head per word, UNKNOWN (-1) where free.
 * Returns -Infinity where no projective tree is compatible.
 */
export function bindConstrainedInside(
  batch: DenseScoreView[],
  constraints: number[][],
  rootPolicy: RootPolicy = "single",
  options?: EngineOptions,
): number[] {
  validateBatch(batch);
  if (constraints.length !== batch.length) {
    throw new RangeError(
      `${batch.length} sentences but ${constraints.length} constraint vectors`,
    );
  }
  constraints.forEach((heads, index) => {
    if (heads.length !== batch[index].n) {
      throw new RangeError(
        `constraints[${index}]: expected ${batch[index].n} heads, ` +
          `got ${heads.length}`,
      );
    }
    for (const h of heads) {
      if (h !== UNKNOWN && (!Number.isInteger(h) || h < 0 || h > batch[index].n)) {
        throw new RangeError(`constraints[${index}]: head ${h} out of range`);
      }
    }
  });
  if (batch.length === 0) return [];
  return parseValueRecords(
    computeOp("constrained", batch, rootPolicy, options, constraints),
    batch.length,
  );
}

/** Arc (and sibling, if supplied) posterior probabilities per sentence. */
export function bindMarginals(
  batch: DenseScoreView[],
  rootPolicy: RootPolicy = "single",
  options?: EngineOptions,
): MarginalBuffers[] {
  validateBatch(batch);
  if (batch.length === 0) return [];
  return parseScoreRecords(
    computeOp("marginals", batch, rootPolicy, options),
    batch.length,
  );
}

/**
 * Best-tree head arrays: "viterbi" maximizes the model score (second order
 * when `sib` is present), "mbr" the sum of arc marginals.
 */
export function bindDecode(
  batch: DenseScoreView[],
  mode: DecodeMode = "viterbi",
  rootPolicy: RootPolicy = "single",
  options?: EngineOptions,
): DecodedTree[] {
  validateBatch(batch);
  if (batch.length === 0) return [];
  return parseHeadsRecords(
    computeOp(mode, batch, rootPolicy, options),
    batch.length,
  );
}
