/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    gaussianImpulse(x: number, y: number, fwhm_mm: number): Float64Array;
    /**
     * Heat-kernel response on the ODF-weighted graph.
     */
    graphImpulse(x: number, y: number, tau: number, order: number): Float64Array;
    maskSlice(): Float64Array;
    /**
     * Builds the crossing-bundle slab and both of its graphs.
     */
    constructor();
    /**
     * Heat-kernel response on the unit-weight graph of the same mask.
     */
    uniformImpulse(x: number, y: number, tau: number, order: number): Float64Array;
    readonly height: number;
    readonly width: number;
}

/**
 * Kernel, approximation and their largest gap, packed for plotting.
 */
export class KernelFit {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly approx: Float64Array;
    readonly exact: Float64Array;
    readonly lambdas: Float64Array;
    readonly supError: number;
}

export function kernelFit(tau: number, order: number, n_points: number): KernelFit;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly __wbg_kernelfit_free: (a: number, b: number) => void;
    readonly demo_gaussianImpulse: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_graphImpulse: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly demo_height: (a: number) => number;
    readonly demo_maskSlice: (a: number) => [number, number];
    readonly demo_new: () => [number, number, number];
    readonly demo_uniformImpulse: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly demo_width: (a: number) => number;
    readonly kernelFit: (a: number, b: number, c: number) => [number, number, number];
    readonly kernelfit_approx: (a: number) => [number, number];
    readonly kernelfit_exact: (a: number) => [number, number];
    readonly kernelfit_lambdas: (a: number) => [number, number];
    readonly kernelfit_supError: (a: number) => number;
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
