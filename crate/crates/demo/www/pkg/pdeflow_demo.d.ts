/* tslint:disable */
/* eslint-disable */

/**
 * Scores an execution graph against a pattern graph, both in the
 * `graph.json` format, with the default metric settings.
 */
export function compare_graphs(exec: string, pattern: string): string;

/**
 * `points` samples of the similarity curve over normalized distances in [0, 1].
 */
export function nged_curve(alpha: number, points: number): string;

/**
 * Heat equation on [0, 1] with zero Dirichlet ends. When `exact` is
 * non-empty it is evaluated at the final time and the discrete L2 error
 * is returned alongside the grid values.
 */
export function solve_heat(alpha: number, t1: number, nx: number, nt: number, ic: string, exact: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly compare_graphs: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly nged_curve: (a: number, b: number) => [number, number, number, number];
    readonly solve_heat: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
