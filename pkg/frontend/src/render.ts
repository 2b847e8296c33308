/** DOM rendering. Payload text always goes through textContent, and every
 * number or string shown comes verbatim from a service response. */

import type { SearchViewState } from "./state.js";
import type { NodePayload, NodeRef, ReasoningPathPayload } from "./types.js";

export interface ViewHandlers {
    onToggleHit(hit: number): void;
    onSelectPath(hit: number, path: number): void;
    onInspect(nodeId: string): void;
    onRequery(factText: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) {
        node.className = className;
    }
    if (text !== undefined) {
        node.textContent = text;
    }
    return node;
}

function nodeChip(ref: NodeRef, handlers: ViewHandlers, testId: string): HTMLElement {
    const wrap = el("span", "node-chip");
    const text = el("span", "node-text", ref.text);
    text.dataset.testid = testId;
    const inspect = el("button", "chip-button", "inspect");
    inspect.type = "button";
    inspect.dataset.testid = `${testId}-inspect`;
    inspect.addEventListener("click", () => handlers.onInspect(ref.id));
    wrap.append(text, inspect);
    return wrap;
}

function renderPath(
    path: ReasoningPathPayload,
    hitIndex: number,
    pathIndex: number,
    selected: boolean,
    handlers: ViewHandlers,
): HTMLElement {
    const item = el("li", selected ? "path selected" : "path");
    item.dataset.testid = "path";
    item.addEventListener("click", () => handlers.onSelectPath(hitIndex, pathIndex));

    const layers = el("dl", "path-layers");
    const layer = (name: string, content: HTMLElement) => {
        layers.append(el("dt", "layer-name", name));
        const value = el("dd", "layer-value");
        value.append(content);
        layers.append(value);
    };

    const factChip = nodeChip(path.fact, handlers, "path-fact");
    const requery = el("button", "chip-button", "search this fact");
    requery.type = "button";
    requery.dataset.testid = "path-requery";
    requery.addEventListener("click", (event) => {
        event.stopPropagation();
        handlers.onRequery(path.fact.text);
    });
    factChip.append(requery);

    layer("Fact", factChip);
    layer("Application", nodeChip(path.application, handlers, "path-application"));
    layer("Norm", nodeChip(path.norm, handlers, "path-norm"));
    const provision = nodeChip(path.provision, handlers, "path-provision");
    if (path.provision.canonical) {
        provision.append(el("code", "canonical", path.provision.canonical));
    }
    layer("Provision", provision);

    if (path.similarity !== undefined) {
        const similarity = el("span", "similarity", path.similarity.toFixed(3));
        similarity.dataset.testid = "path-similarity";
        item.append(similarity);
    }
    item.append(layers);
    return item;
}

export function renderResults(
    container: HTMLElement,
    state: SearchViewState,
    handlers: ViewHandlers,
): void {
    container.replaceChildren();

    if (state.status === "error") {
        const box = el("div", "error-box", state.error ?? "request failed");
        box.dataset.testid = "error";
        container.append(box);
        return;
    }
    if (state.status === "loading") {
        container.append(el("div", "loading", "searching…"));
        return;
    }
    if (state.status === "loaded" && state.hits.length === 0) {
        container.append(el("div", "empty", "no provisions found"));
        return;
    }

    const list = el("ol", "hit-list");
    state.hits.forEach((hit, hitIndex) => {
        const card = el("li", "hit-card");
        card.dataset.testid = "hit-card";

        const header = el("button", "hit-header");
        header.type = "button";
        header.dataset.testid = "hit-toggle";
        const provision = el("code", "hit-provision", hit.provision);
        provision.dataset.testid = "hit-provision";
        const score = el("span", "hit-score", hit.score.toFixed(3));
        score.dataset.testid = "hit-score";
        header.append(
            provision,
            score,
            el("span", "hit-count", `${hit.paths.length} path${hit.paths.length === 1 ? "" : "s"}`),
        );
        header.addEventListener("click", () => handlers.onToggleHit(hitIndex));
        card.append(header);

        if (state.expanded.has(hitIndex)) {
            const paths = el("ul", "path-list");
            paths.dataset.testid = "path-list";
            hit.paths.forEach((path, pathIndex) => {
                const selected =
                    state.selectedPath?.hit === hitIndex && state.selectedPath?.path === pathIndex;
                paths.append(renderPath(path, hitIndex, pathIndex, selected, handlers));
            });
            card.append(paths);
        }
        list.append(card);
    });
    container.append(list);
}

export function renderInspector(
    container: HTMLElement,
    payload: NodePayload | null,
    paths: ReasoningPathPayload[] | null,
    error: string | null,
    handlers: ViewHandlers,
): void {
    container.replaceChildren();
    if (error !== null) {
        const box = el("div", "error-box", error);
        box.dataset.testid = "inspector-error";
        container.append(box);
        return;
    }
    if (payload === null) {
        return;
    }
    const panel = el("div", "inspector-panel");
    panel.dataset.testid = "inspector";
    const label = el("span", "node-label", payload.label);
    label.dataset.testid = "inspector-label";
    panel.append(label);
    const text = el("p", "node-text", payload.text);
    text.dataset.testid = "inspector-text";
    panel.append(text);
    panel.append(el("p", "node-meta", `document ${payload.doc_id} · segment ${payload.segment_id}`));
    if (payload.provision) {
        panel.append(el("code", "canonical", payload.provision));
    }

    const edges = el("div", "edge-lists");
    const edgeList = (title: string, refs: { kind: string; id: string }[]) => {
        const block = el("div", "edge-block");
        block.append(el("h4", undefined, title));
        const items = el("ul");
        for (const ref of refs) {
            const item = el("li");
            item.append(el("span", "edge-kind", ref.kind));
            const link = el("button", "chip-button", ref.id);
            link.type = "button";
            link.addEventListener("click", () => handlers.onInspect(ref.id));
            item.append(link);
            items.append(item);
        }
        block.append(items);
        edges.append(block);
    };
    edgeList("outbound", payload.out_edges.map((e) => ({ kind: e.kind, id: e.dst ?? "" })));
    edgeList("inbound", payload.in_edges.map((e) => ({ kind: e.kind, id: e.src ?? "" })));
    panel.append(edges);

    if (paths !== null && paths.length > 0) {
        const block = el("div", "inspector-paths");
        block.append(el("h4", undefined, "reasoning paths"));
        const list = el("ul", "path-list");
        paths.forEach((path, index) => {
            list.append(renderPath(path, -1, index, false, handlers));
        });
        block.append(list);
        panel.append(block);
    }
    container.append(panel);
}
