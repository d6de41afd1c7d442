/* tslint:disable */
/* eslint-disable */

/**
 * `{label, discrete, x: [...], y: [...]}` over `[-span, span]`; pmf values at
 * integers for discrete laws, `points` density samples otherwise.
 */
export function density_curve(kind: string, eps: number, reps: number, ct: number, span: number, points: number): string;

/**
 * Mean absolute noise, variance, entropy (continuous and integer-released),
 * general budget and worst-case epsilon.
 */
export function mechanism_summary(kind: string, eps: number, reps: number, ct: number): string;

/**
 * Histogram of `n` integer noise draws (continuous laws rounded), plus the
 * fraction within `|Y| <= ct`.
 */
export function sample_histogram(kind: string, eps: number, reps: number, ct: number, n: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly density_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly mechanism_summary: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly sample_histogram: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
