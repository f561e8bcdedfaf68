/* tslint:disable */
/* eslint-disable */

/**
 * Capacity of the leftmost `x` fraction of the `n`-ary boundary, sampled
 * at `samples + 1` points; returns `{"points": [[x, lower, upper], …], "full"}`.
 */
export function capacity_profile(n: number, p: number, depth: number, samples: number): string;

/**
 * Builds a subtree of the binary tree whose capacity is `c`.
 */
export function subdyadic_tree(c: number, p: number, digits: number): string;

/**
 * Tiles the finite tree `spec` cut at `depth` and returns
 * `{"svg", "width", "squares"}`.
 */
export function tiling_svg(spec: string, depth: number, labels: boolean): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly capacity_profile: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly subdyadic_tree: (a: number, b: number, c: number) => [number, number, number, number];
    readonly tiling_svg: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
