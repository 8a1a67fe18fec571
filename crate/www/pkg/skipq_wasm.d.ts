/* tslint:disable */
/* eslint-disable */

/**
 * One live trajectory, stepped in chunks from the page. Queue snapshots
 * come back as plain arrays for canvas rendering; running statistics are
 * aggregated on the Rust side.
 */
export class SimHandle {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Advance `slots` steps and return a JSON summary of the run so far.
     */
    advance(slots: number): string;
    /**
     * Slots per dispatching cycle for the configured policy.
     */
    cycle_len(): number;
    /**
     * Build a simulation. `policy` is one of `slq`, `round-robin`,
     * `repeated-jsq`, `jsq`; `k` and `d` are read only where the policy
     * uses them. Unstable loads are allowed — watching the divergence is
     * part of the point — but malformed laws are refused.
     */
    constructor(policy: string, n: number, k: bigint, d: number, n_lambda: number, var_a_total: number, a_max: number, mu: number, sigma_mu_sq: number, s_max: bigint, seed: bigint);
    /**
     * Current queue lengths, for drawing.
     */
    queues(): Float64Array;
}

/**
 * The heavy-traffic sandwich for a homogeneous system: `points` slacks
 * spaced geometrically from the drift margin `Δ` down to `Δ/1000`, each
 * with the universal lower bound and (where defined) the collapse-based
 * upper bound on `ε·E[avgQ]`, plus the shared `ε → 0` limit.
 */
export function sandwich_curve_json(n: number, mu: number, sigma_mu_sq: number, s_max: number, k: bigint, d: number, a_max: number, var_a_total: number, points: number): string;

/**
 * Stability analysis for a comma-separated rate vector: the sustainable
 * arrival boundary at skip depth `d` (0 means plain round-robin), whether
 * the given load is inside it, and the smallest depth that preserves the
 * full capacity.
 */
export function stability_json(rates: Float64Array, d: number, n_lambda: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simhandle_free: (a: number, b: number) => void;
    readonly sandwich_curve_json: (a: number, b: number, c: number, d: number, e: bigint, f: number, g: number, h: number, i: number) => [number, number, number, number];
    readonly simhandle_advance: (a: number, b: number) => [number, number, number, number];
    readonly simhandle_cycle_len: (a: number) => number;
    readonly simhandle_new: (a: number, b: number, c: number, d: bigint, e: number, f: number, g: number, h: number, i: number, j: number, k: bigint, l: bigint) => [number, number, number];
    readonly simhandle_queues: (a: number) => [number, number];
    readonly stability_json: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
