/** Search-view state. Transitions are pure functions invoked only from user
 * actions or completed requests, so every render is a function of one state
 * value. */

import type { ProvisionHit } from "./types.js";

export const K_MIN = 1;
export const K_MAX = 10;
export const K_DEFAULT = 3;

export type SearchStatus = "idle" | "loading" | "loaded" | "error";

export interface PathSelection {
    hit: number;
    path: number;
}

export interface SearchViewState {
    query: string;
    k: number;
    mask: boolean;
    status: SearchStatus;
    error: string | null;
    hits: ProvisionHit[];
    /** Indices of hit cards whose path traces are expanded. */
    expanded: ReadonlySet<number>;
    selectedPath: PathSelection | null;
}

export function initialState(): SearchViewState {
    return {
        query: "",
        k: K_DEFAULT,
        mask: true,
        status: "idle",
        error: null,
        hits: [],
        expanded: new Set(),
        selectedPath: null,
    };
}

export function clampK(k: number): number {
    return Math.min(K_MAX, Math.max(K_MIN, Math.round(k)));
}

export function startSearch(state: SearchViewState, query: string): SearchViewState {
    return { ...state, query, status: "loading", error: null };
}

export function completeSearch(state: SearchViewState, hits: ProvisionHit[]): SearchViewState {
    return {
        ...state,
        status: "loaded",
        error: null,
        hits,
        expanded: new Set(),
        selectedPath: null,
    };
}

export function failSearch(state: SearchViewState, message: string): SearchViewState {
    return { ...state, status: "error", error: message, hits: [], expanded: new Set(), selectedPath: null };
}

export function toggleExpanded(state: SearchViewState, hit: number): SearchViewState {
    const expanded = new Set(state.expanded);
    if (expanded.has(hit)) {
        expanded.delete(hit);
    } else {
        expanded.add(hit);
    }
    return { ...state, expanded };
}

export function selectPath(state: SearchViewState, selection: PathSelection | null): SearchViewState {
    return { ...state, selectedPath: selection };
}

export function setK(state: SearchViewState, k: number): SearchViewState {
    return { ...state, k: clampK(k) };
}

export function setMask(state: SearchViewState, mask: boolean): SearchViewState {
    return { ...state, mask };
}
