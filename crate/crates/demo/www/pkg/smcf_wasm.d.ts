/* tslint:disable */
/* eslint-disable */

/**
 * The flow from `u0 = 0`, advanced on demand.
 */
export class Flow {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Takes `steps` semi-implicit steps, growing the step by 5% each time and
     * halving it when the graph would leave the space-like cone.
     */
    advance(steps: number): void;
    mean_speed(): number;
    constructor(a: number, b: number, n: number);
    sup_du2(): number;
    time(): number;
    /**
     * `u - mean u` on the physical nodes.
     */
    values(): Float64Array;
    xy(): Float64Array;
}

export class Translator {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    c3(): number;
    values(): Float64Array;
    xy(): Float64Array;
}

/**
 * Speeds `c3` for `a` at `count` equally spaced values in `[0, a_max]`, with `b` fixed.
 */
export function speed_curve(a_max: number, b: number, count: number, n: number): Float64Array;

/**
 * Translating solution for `phi = a + b cos s` on an `n x 2n` grid.
 */
export function translator(a: number, b: number, n: number): Translator;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_flow_free: (a: number, b: number) => void;
    readonly __wbg_translator_free: (a: number, b: number) => void;
    readonly flow_advance: (a: number, b: number) => [number, number];
    readonly flow_mean_speed: (a: number) => number;
    readonly flow_new: (a: number, b: number, c: number) => [number, number, number];
    readonly flow_sup_du2: (a: number) => number;
    readonly flow_time: (a: number) => number;
    readonly flow_values: (a: number) => [number, number];
    readonly flow_xy: (a: number) => [number, number];
    readonly speed_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly translator: (a: number, b: number, c: number) => [number, number, number];
    readonly translator_c3: (a: number) => number;
    readonly translator_values: (a: number) => [number, number];
    readonly translator_xy: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
