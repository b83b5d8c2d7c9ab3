/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_flow_free: (a: number, b: number) => void;
export const __wbg_translator_free: (a: number, b: number) => void;
export const flow_advance: (a: number, b: number) => [number, number];
export const flow_mean_speed: (a: number) => number;
export const flow_new: (a: number, b: number, c: number) => [number, number, number];
export const flow_sup_du2: (a: number) => number;
export const flow_time: (a: number) => number;
export const flow_values: (a: number) => [number, number];
export const flow_xy: (a: number) => [number, number];
export const speed_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const translator: (a: number, b: number, c: number) => [number, number, number];
export const translator_c3: (a: number) => number;
export const translator_values: (a: number) => [number, number];
export const translator_xy: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
