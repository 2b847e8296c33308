/** Controller wiring the search form, state, client, and renderers. */

import { ApiError, isAbortError, LkgClient } from "./api.js";
import {
    completeSearch,
    failSearch,
    initialState,
    K_DEFAULT,
    K_MAX,
    K_MIN,
    selectPath,
    setK,
    setMask,
    startSearch,
    toggleExpanded,
    type SearchViewState,
} from "./state.js";
import { renderInspector, renderResults, type ViewHandlers } from "./render.js";
import type { NodePayload, ReasoningPathPayload, SearchRequest } from "./types.js";

const FACT_ID_PATTERN = /^n[0-9a-f]{16}$/;

export class LkgApp {
    state: SearchViewState = initialState();

    private readonly input: HTMLInputElement;
    private readonly slider: HTMLInputElement;
    private readonly kValue: HTMLElement;
    private readonly maskToggle: HTMLInputElement;
    private readonly results: HTMLElement;
    private readonly inspector: HTMLElement;
    private readonly handlers: ViewHandlers;

    constructor(root: HTMLElement, private readonly client: LkgClient) {
        root.replaceChildren();
        const form = document.createElement("form");
        form.className = "search-form";

        this.input = document.createElement("input");
        this.input.type = "search";
        this.input.placeholder = "Describe a fact, or paste a fact node id…";
        this.input.dataset.testid = "query-input";

        const submit = document.createElement("button");
        submit.type = "submit";
        submit.textContent = "search";

        this.slider = document.createElement("input");
        this.slider.type = "range";
        this.slider.min = String(K_MIN);
        this.slider.max = String(K_MAX);
        this.slider.value = String(K_DEFAULT);
        this.slider.dataset.testid = "k-slider";
        this.kValue = document.createElement("span");
        this.kValue.textContent = `k=${K_DEFAULT}`;

        this.maskToggle = document.createElement("input");
        this.maskToggle.type = "checkbox";
        this.maskToggle.checked = true;
        this.maskToggle.dataset.testid = "mask-toggle";
        const maskLabel = document.createElement("label");
        maskLabel.append(this.maskToggle, document.createTextNode(" mask query fact"));

        form.append(this.input, submit, this.slider, this.kValue, maskLabel);

        this.results = document.createElement("section");
        this.results.className = "results";
        this.results.dataset.testid = "results";
        this.inspector = document.createElement("aside");
        this.inspector.className = "inspector";
        this.inspector.dataset.testid = "inspector-pane";

        root.append(form, this.results, this.inspector);

        this.handlers = {
            onToggleHit: (hit) => {
                this.state = toggleExpanded(this.state, hit);
                this.renderAll();
            },
            onSelectPath: (hit, path) => {
                this.state = selectPath(this.state, { hit, path });
                this.renderAll();
            },
            onInspect: (nodeId) => {
                void this.inspect(nodeId);
            },
            onRequery: (factText) => {
                this.input.value = factText;
                void this.runSearch();
            },
        };

        form.addEventListener("submit", (event) => {
            event.preventDefault();
            void this.runSearch();
        });
        this.slider.addEventListener("input", () => {
            this.state = setK(this.state, Number(this.slider.value));
            this.kValue.textContent = `k=${this.state.k}`;
            if (this.state.query) {
                void this.runSearch();
            }
        });
        this.maskToggle.addEventListener("change", () => {
            this.state = setMask(this.state, this.maskToggle.checked);
            if (this.state.query) {
                void this.runSearch();
            }
        });

        this.renderAll();
    }

    /** Issue a search for the current input; stale responses are discarded. */
    async runSearch(): Promise<void> {
        const query = this.input.value.trim() || this.state.query;
        if (!query) {
            return;
        }
        const request: SearchRequest = {
            k: this.state.k,
            mask: this.state.mask,
        };
        if (FACT_ID_PATTERN.test(query)) {
            request.fact_id = query;
        } else {
            request.text = query;
        }
        this.state = startSearch(this.state, query);
        this.renderAll();

        const { seq, result } = this.client.search(request);
        try {
            const response = await result;
            if (!this.client.isCurrent(seq)) {
                return; // superseded by a newer search
            }
            this.state = completeSearch(this.state, response.hits);
        } catch (error) {
            if (isAbortError(error) || !this.client.isCurrent(seq)) {
                return;
            }
            const message =
                error instanceof ApiError
                    ? `${error.code}: ${error.message}`
                    : "service unreachable";
            this.state = failSearch(this.state, message);
        }
        this.renderAll();
    }

    /** Load a node (plus its reasoning paths when it is a fact) into the panel. */
    async inspect(nodeId: string): Promise<void> {
        let payload: NodePayload;
        try {
            payload = await this.client.node(nodeId);
        } catch (error) {
            const message =
                error instanceof ApiError && error.status === 404
                    ? "node not found"
                    : "failed to load node";
            renderInspector(this.inspector, null, null, message, this.handlers);
            return;
        }
        let paths: ReasoningPathPayload[] | null = null;
        if (payload.label === "Fact") {
            try {
                paths = (await this.client.factPaths(nodeId)).paths;
            } catch {
                paths = null; // panel still shows the node itself
            }
        }
        renderInspector(this.inspector, payload, paths, null, this.handlers);
    }

    private renderAll(): void {
        renderResults(this.results, this.state, this.handlers);
    }
}
