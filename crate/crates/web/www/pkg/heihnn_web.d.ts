/* tslint:disable */
/* eslint-disable */

/**
 * JSON [`MaskView`].
 */
export function horMask(tau: number, min_keep: number, outlier_rate: number, seed: number): string;

/**
 * JSON [`Heatmap`]; `kind` is `row-sum`, `edge-degree` or `chebyshev`.
 */
export function operatorHeatmap(kind: string, outlier_rate: number): string;

/**
 * JSON [`Curve`] for one training run.
 */
export function trainCurve(alpha: number, beta: number, hor: string, tau: number, outlier_rate: number, epochs: number, lr: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly horMask: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly operatorHeatmap: (a: number, b: number, c: number) => [number, number, number, number];
    readonly trainCurve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
