import { Client } from "./api.js";
import { App, AppElements } from "./app.js";

function need<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing #${id} in index.html`);
    return node as T;
}

const ui: AppElements = {
    marking: need("marking"),
    steps: need("steps"),
    timeline: need("timeline"),
    notice: need("notice"),
    undo: need<HTMLButtonElement>("undo"),
    redo: need<HTMLButtonElement>("redo"),
    reset: need<HTMLButtonElement>("reset"),
    exportBtn: need<HTMLButtonElement>("export"),
};

const app = new App(new Client(""), ui);
app.start().catch((err) => {
    ui.notice.textContent = `cannot reach the nestpn server: ${err}`;
    ui.notice.classList.remove("hidden");
});
