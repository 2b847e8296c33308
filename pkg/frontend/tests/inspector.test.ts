/** Node-inspector panel: payload fidelity, fact paths, not-found state. */

import { describe, expect, it } from "vitest";

import { LkgClient } from "../src/api.js";
import { LkgApp } from "../src/app.js";
import { RECORDING, RecordedService } from "./helpers.js";

function makeApp() {
    document.body.innerHTML = '<main id="app"></main>';
    const root = document.getElementById("app")!;
    const service = new RecordedService();
    const client = new LkgClient("http://recorded.test", service.fetch);
    return { app: new LkgApp(root, client), root, service };
}

describe("node inspector", () => {
    it("shows the /v1/nodes payload verbatim for a norm", async () => {
        const { app, root } = makeApp();
        await app.inspect(RECORDING.norm_id);
        const payload = RECORDING.responses[`node:${RECORDING.norm_id}`];

        const label = root.querySelector('[data-testid="inspector-label"]');
        const text = root.querySelector('[data-testid="inspector-text"]');
        expect(label?.textContent).toBe(payload.label);
        expect(text?.textContent).toBe(payload.text);
        // inbound/outbound reasoning links are listed
        const kinds = Array.from(root.querySelectorAll(".edge-kind")).map(
            (el) => el.textContent,
        );
        const expected = [
            ...payload.out_edges.map((e: { kind: string }) => e.kind),
            ...payload.in_edges.map((e: { kind: string }) => e.kind),
        ];
        expect(kinds).toEqual(expected);
    });

    it("shows reasoning paths for a fact node", async () => {
        const { app, root } = makeApp();
        await app.inspect(RECORDING.neighbor_fact);
        const payload = RECORDING.responses[`paths:${RECORDING.neighbor_fact}`];
        const paths = root.querySelectorAll('[data-testid="inspector"] [data-testid="path"]');
        expect(paths.length).toBe(payload.paths.length);
    });

    it("renders a not-found state for unknown ids", async () => {
        const { app, root } = makeApp();
        await app.inspect("ghost");
        const error = root.querySelector('[data-testid="inspector-error"]');
        expect(error?.textContent).toBe("node not found");
    });

    it("talks only to documented /v1 endpoints", async () => {
        const { app, root, service } = makeApp();
        await app.inspect(RECORDING.neighbor_fact);
        const input = root.querySelector<HTMLInputElement>('[data-testid="query-input"]')!;
        input.value = RECORDING.fact_id;
        await app.runSearch();
        const allowed = /^\/v1\/(search|nodes\/.+|facts\/.+\/paths|health|stats|export\/jsonld)$/;
        for (const request of service.requests) {
            expect(request.path).toMatch(allowed);
        }
    });
});
