/** Payload types mirroring the service /v1 API. The console never derives
 * retrieval data itself: everything rendered originates in these payloads. */

export interface NodeRef {
    id: string;
    text: string;
    /** Canonical provision string; present on provision nodes only. */
    canonical?: string;
}

export interface ReasoningPathPayload {
    fact: NodeRef;
    application: NodeRef;
    norm: NodeRef;
    provision: NodeRef;
    /** Neighbor-fact similarity; present in search hits, absent in /facts/{id}/paths. */
    similarity?: number;
}

export interface ProvisionHit {
    provision: string;
    score: number;
    paths: ReasoningPathPayload[];
}

export interface SearchResponse {
    hits: ProvisionHit[];
}

export interface SearchRequest {
    text?: string;
    fact_id?: string;
    k: number;
    mask: boolean;
}

export interface EdgeRef {
    kind: string;
    src?: string;
    dst?: string;
}

export interface NodePayload {
    id: string;
    label: string;
    text: string;
    doc_id: string;
    segment_id: string;
    provision: string | null;
    out_edges: EdgeRef[];
    in_edges: EdgeRef[];
}

export interface FactPathsPayload {
    fact_id: string;
    paths: ReasoningPathPayload[];
}

export interface ApiErrorPayload {
    status: number;
    code: string;
    message: string;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;
