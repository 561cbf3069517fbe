/* tslint:disable */
/* eslint-disable */

/**
 * Entropy-preserving path on `points` log-spaced times in `[t_min, 1]`,
 * plus the isoperimetric verdict for the input.
 */
export function entropy_path(pmf: string, t_min: number, points: number): string;

/**
 * `V(T_a X + T_(1-a) Y)` against `a V(X) + (1-a) V(Y)` on `points` values
 * of `a` in (0, 1). Negative margins are violations of the thinned EPI.
 */
export function tepi_curve(x: string, y: string, points: number): string;

/**
 * Thins `pmf` by `alpha` and reports both laws with their entropy and V.
 */
export function thin_explorer(pmf: string, alpha: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly entropy_path: (a: number, b: number, c: number, d: number) => [number, number];
    readonly tepi_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly thin_explorer: (a: number, b: number, c: number) => [number, number];
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
