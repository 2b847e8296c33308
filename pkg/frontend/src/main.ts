import { LkgClient } from "./api.js";
import { LkgApp } from "./app.js";

declare global {
    interface Window {
        LKG_API_BASE?: string;
    }
}

const DEFAULT_BASE = "http://127.0.0.1:8321";

function bootstrap(): void {
    const root = document.getElementById("app");
    if (root === null) {
        throw new Error("missing #app container");
    }
    const base = window.LKG_API_BASE ?? DEFAULT_BASE;
    new LkgApp(root, new LkgClient(base));
}

bootstrap();
