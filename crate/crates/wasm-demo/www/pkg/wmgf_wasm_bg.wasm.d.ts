/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const __wbg_kernelfit_free: (a: number, b: number) => void;
export const demo_gaussianImpulse: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_graphImpulse: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const demo_height: (a: number) => number;
export const demo_maskSlice: (a: number) => [number, number];
export const demo_new: () => [number, number, number];
export const demo_uniformImpulse: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const demo_width: (a: number) => number;
export const kernelFit: (a: number, b: number, c: number) => [number, number, number];
export const kernelfit_approx: (a: number) => [number, number];
export const kernelfit_exact: (a: number) => [number, number];
export const kernelfit_lambdas: (a: number) => [number, number];
export const kernelfit_supError: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
