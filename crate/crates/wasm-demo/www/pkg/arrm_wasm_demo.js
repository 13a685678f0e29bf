/**
 * Mean stall fraction and cell SE of both policies on one population.
 */
export class Comparison {
    static __wrap(ptr) {
        const obj = Object.create(Comparison.prototype);
        obj.__wbg_ptr = ptr;
        ComparisonFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        ComparisonFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_comparison_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get arrm_se() {
        const ret = wasm.__wbg_get_comparison_arrm_se(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get arrm_stall() {
        const ret = wasm.__wbg_get_comparison_arrm_stall(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get baseline_se() {
        const ret = wasm.__wbg_get_comparison_baseline_se(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get baseline_stall() {
        const ret = wasm.__wbg_get_comparison_baseline_stall(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get optimizations() {
        const ret = wasm.__wbg_get_comparison_optimizations(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @param {number} arg0
     */
    set arrm_se(arg0) {
        wasm.__wbg_set_comparison_arrm_se(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set arrm_stall(arg0) {
        wasm.__wbg_set_comparison_arrm_stall(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set baseline_se(arg0) {
        wasm.__wbg_set_comparison_baseline_se(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set baseline_stall(arg0) {
        wasm.__wbg_set_comparison_baseline_stall(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set optimizations(arg0) {
        wasm.__wbg_set_comparison_optimizations(this.__wbg_ptr, arg0);
    }
}
if (Symbol.dispose) Comparison.prototype[Symbol.dispose] = Comparison.prototype.free;

/**
 * Trajectory of one user, slot by slot.
 */
export class UserRun {
    static __wrap(ptr) {
        const obj = Object.create(UserRun.prototype);
        obj.__wbg_ptr = ptr;
        UserRunFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        UserRunFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_userrun_free(ptr, 0);
    }
    /**
     * Buffer level at the end of each slot.
     * @returns {Float64Array}
     */
    get bufferMbit() {
        const ret = wasm.userrun_bufferMbit(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * PRBs allocated per slot.
     * @returns {Float64Array}
     */
    get omega() {
        const ret = wasm.userrun_omega(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {number}
     */
    get optimizations() {
        const ret = wasm.userrun_optimizations(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * Achievable rate of one PRB in each slot.
     * @returns {Float64Array}
     */
    get rateMbps() {
        const ret = wasm.userrun_rateMbps(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {number}
     */
    get spectralEfficiency() {
        const ret = wasm.userrun_spectralEfficiency(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {Float64Array}
     */
    get stall() {
        const ret = wasm.userrun_stall(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
}
if (Symbol.dispose) UserRun.prototype[Symbol.dispose] = UserRun.prototype.free;

/**
 * Runs the anticipatory scheduler and the baseline on the same arrivals.
 * `gamma ≤ 0` picks the trade-off weight automatically.
 * @param {number} users
 * @param {number} video_mbps
 * @param {number} gamma
 * @param {number} sigma_db
 * @param {number} tx_power_dbm
 * @param {number} seed
 * @returns {Comparison}
 */
export function comparePolicies(users, video_mbps, gamma, sigma_db, tx_power_dbm, seed) {
    const ret = wasm.comparePolicies(users, video_mbps, gamma, sigma_db, tx_power_dbm, seed);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return Comparison.__wrap(ret[0]);
}

/**
 * Plans and plays out one user's whole trip across the two cells.
 * @param {number} video_mbps
 * @param {number} horizon
 * @param {number} reopt_step
 * @param {number} buffer_cap_mbit
 * @param {number} tx_power_dbm
 * @returns {UserRun}
 */
export function planSingleUser(video_mbps, horizon, reopt_step, buffer_cap_mbit, tx_power_dbm) {
    const ret = wasm.planSingleUser(video_mbps, horizon, reopt_step, buffer_cap_mbit, tx_power_dbm);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return UserRun.__wrap(ret[0]);
}

/**
 * Per-PRB rate in Mbit/s every `step_m` metres from the first BS to the
 * second.
 * @param {number} tx_power_dbm
 * @param {number} step_m
 * @returns {Float64Array}
 */
export function rateProfile(tx_power_dbm, step_m) {
    const ret = wasm.rateProfile(tx_power_dbm, step_m);
    if (ret[3]) {
        throw takeFromExternrefTable0(ret[2]);
    }
    var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
    wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
    return v1;
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg_Error_30c8987f7c2ed4e2: function(arg0, arg1) {
            const ret = Error(getStringFromWasm0(arg0, arg1));
            return ret;
        },
        __wbg___wbindgen_throw_41e9ee4f547fc59a: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./arrm_wasm_demo_bg.js": import0,
    };
}

const ComparisonFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_comparison_free(ptr, 1));
const UserRunFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_userrun_free(ptr, 1));

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat64ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }


    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
