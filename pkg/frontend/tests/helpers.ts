/** Recorded-response mock service: every reply below was captured from a
 * live `lkg serve` run over a seeded snapshot, so contract tests compare the
 * DOM against genuine service payloads. */

import recorded from "./fixtures/recorded_service.json";
import type { FetchLike, SearchResponse } from "../src/types.js";

type Recorded = {
    base: string;
    fact_id: string;
    norm_id: string;
    neighbor_fact: string;
    responses: Record<string, any>;
};

export const RECORDING = recorded as Recorded;

function jsonResponse(payload: any): Response {
    const status = payload.__status ?? 200;
    const body = { ...payload };
    delete body.__status;
    return new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
    });
}

export interface RecordedServiceOptions {
    /** Reply used for text queries not present in the recording. */
    fallbackTextSearch?: boolean;
}

export class RecordedService {
    requests: { path: string; body?: any }[] = [];

    constructor(private readonly options: RecordedServiceOptions = {}) {}

    fetch: FetchLike = async (input, init) => {
        const url = new URL(input);
        const path = url.pathname;
        const body = init?.body ? JSON.parse(String(init.body)) : undefined;
        this.requests.push({ path, body });

        if (path === "/v1/search") {
            const mask = body.mask ? "true" : "false";
            let key: string;
            if (body.fact_id !== undefined) {
                key = `search:fact:k=${body.k}:mask=${mask}`;
            } else {
                key = `search:text:k=${body.k}:mask=${mask}`;
            }
            const payload = RECORDING.responses[key];
            if (payload !== undefined) {
                return jsonResponse(payload);
            }
            if (body.text !== undefined && this.options.fallbackTextSearch) {
                return jsonResponse(RECORDING.responses["search:text:k=3:mask=true"]);
            }
            throw new Error(`no recording for ${key}`);
        }
        const nodeMatch = path.match(/^\/v1\/nodes\/(.+)$/);
        if (nodeMatch) {
            const payload =
                RECORDING.responses[`node:${decodeURIComponent(nodeMatch[1])}`] ??
                RECORDING.responses["node:ghost"];
            return jsonResponse(payload);
        }
        const pathsMatch = path.match(/^\/v1\/facts\/(.+)\/paths$/);
        if (pathsMatch) {
            const payload = RECORDING.responses[`paths:${decodeURIComponent(pathsMatch[1])}`];
            if (payload !== undefined) {
                return jsonResponse(payload);
            }
            return jsonResponse({ __status: 404, status: 404, code: "not_found", message: "unknown node" });
        }
        if (path === "/v1/health") {
            return jsonResponse(RECORDING.responses.health);
        }
        throw new Error(`unrecorded path ${path}`);
    };
}

export function recordedSearch(key: string): SearchResponse {
    const payload = RECORDING.responses[key];
    if (payload === undefined) {
        throw new Error(`missing recording ${key}`);
    }
    return payload as SearchResponse;
}

/** Deferred fetch for cancellation tests: each call resolves only when
 * released, and honors AbortSignal like a real transport. */
export class DeferredFetch {
    private pending: {
        resolve(response: Response): void;
        reject(error: unknown): void;
        payload: any;
        signal?: AbortSignal | null;
    }[] = [];

    constructor(private readonly payloads: any[]) {}

    fetch: FetchLike = (_input, init) => {
        const payload = this.payloads[this.pending.length];
        return new Promise<Response>((resolve, reject) => {
            const entry = { resolve, reject, payload, signal: init?.signal };
            init?.signal?.addEventListener("abort", () => {
                reject(new DOMException("aborted", "AbortError"));
            });
            this.pending.push(entry);
        });
    };

    /** Resolve the i-th issued request (unless it was aborted). */
    release(index: number): void {
        const entry = this.pending[index];
        if (entry.signal?.aborted) {
            return; // already rejected via the abort listener
        }
        entry.resolve(jsonResponse(entry.payload));
    }

    get count(): number {
        return this.pending.length;
    }
}
