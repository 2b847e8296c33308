/** Typed client for the /v1 API with single-flight search semantics:
 * issuing a new search aborts the previous request, and every search carries
 * a sequence number so callers can discard responses that arrive after a
 * newer search was issued. */

import type {
    ApiErrorPayload,
    FactPathsPayload,
    FetchLike,
    NodePayload,
    SearchRequest,
    SearchResponse,
} from "./types.js";

export class ApiError extends Error {
    constructor(
        readonly status: number,
        readonly code: string,
        message: string,
    ) {
        super(message);
        this.name = "ApiError";
    }
}

export function isAbortError(error: unknown): boolean {
    return error instanceof DOMException && error.name === "AbortError";
}

export interface SearchHandle {
    seq: number;
    result: Promise<SearchResponse>;
}

export class LkgClient {
    private searchSeq = 0;
    private inflight: AbortController | null = null;

    constructor(
        private readonly baseUrl: string,
        private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    ) {}

    /** At most one search is in flight; a new one cancels its predecessor. */
    search(request: SearchRequest): SearchHandle {
        const seq = ++this.searchSeq;
        this.inflight?.abort();
        const controller = new AbortController();
        this.inflight = controller;
        return {
            seq,
            result: this.request<SearchResponse>("/v1/search", {
                method: "POST",
                headers: { "Content-Type": "application/json" },
                body: JSON.stringify(request),
                signal: controller.signal,
            }),
        };
    }

    /** True while no newer search has been issued since `seq`. */
    isCurrent(seq: number): boolean {
        return seq === this.searchSeq;
    }

    node(id: string): Promise<NodePayload> {
        return this.request<NodePayload>(`/v1/nodes/${encodeURIComponent(id)}`);
    }

    factPaths(id: string): Promise<FactPathsPayload> {
        return this.request<FactPathsPayload>(`/v1/facts/${encodeURIComponent(id)}/paths`);
    }

    health(): Promise<{ status: string; snapshot?: string }> {
        return this.request("/v1/health");
    }

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const response = await this.fetchFn(this.baseUrl + path, init);
        if (!response.ok) {
            let payload: Partial<ApiErrorPayload> = {};
            try {
                payload = (await response.json()) as ApiErrorPayload;
            } catch {
                // non-JSON error body; fall through to the generic message
            }
            throw new ApiError(
                payload.status ?? response.status,
                payload.code ?? "internal",
                payload.message ?? `request failed with status ${response.status}`,
            );
        }
        return (await response.json()) as T;
    }
}
