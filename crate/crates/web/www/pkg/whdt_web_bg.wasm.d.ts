/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const ball_trace: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const run_program: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number];
export const thomson_series: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
