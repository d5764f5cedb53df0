// DOM builders for the marking tree and the step list.  Pure functions of the
// last server payloads; unknown payload shapes degrade to a plain text node
// rather than failing the render.

import {
    MarkingJson,
    NetInfo,
    NetTokenJson,
    PlaceMarking,
    StepJson,
} from "./api.js";

export const STEP_DISPLAY_CAP = 200;

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    cls?: string,
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (cls) node.className = cls;
    if (text !== undefined) node.textContent = text;
    return node;
}

function isNetTokens(value: PlaceMarking): value is NetTokenJson[] {
    return Array.isArray(value) && value.length > 0 && typeof value[0] === "object";
}

function placeValue(net: NetInfo, value: PlaceMarking): HTMLElement {
    if (typeof value === "number") {
        return el("span", "count", String(value));
    }
    if (Array.isArray(value) && value.length === 0) {
        return el("span", "count empty", "{}");
    }
    if (isNetTokens(value)) {
        const wrap = el("div", "tokens");
        for (const token of value) {
            wrap.appendChild(tokenCard(net, token));
        }
        return wrap;
    }
    if (Array.isArray(value)) {
        return el("span", "colors", "{" + (value as string[]).join(",") + "}");
    }
    // render-safe fallback for anything a newer server might send
    return el("span", "unknown", JSON.stringify(value));
}

export function tokenCard(net: NetInfo, token: NetTokenJson): HTMLElement {
    const card = el("div", "token-card");
    if (token.rtid !== undefined) {
        card.dataset.rtid = String(token.rtid);
    }
    const title = el("div", "token-title",
        token.component + (token.rtid !== undefined ? ` #${token.rtid}` : ""));
    card.appendChild(title);
    card.appendChild(markingTable(net, token.component, token.marking ?? {}));
    return card;
}

function markingTable(net: NetInfo, component: string, marking: MarkingJson): HTMLElement {
    const table = el("div", "marking");
    const comp = net.components.find((c) => c.name === component);
    const order = comp ? comp.places.map((p) => p.name) : Object.keys(marking);
    for (const name of order) {
        if (!(name in marking)) continue;
        const row = el("div", "place-row");
        row.appendChild(el("span", "place-name", name));
        row.appendChild(placeValue(net, marking[name]));
        table.appendChild(row);
    }
    for (const name of Object.keys(marking)) {
        if (!order.includes(name)) {
            const row = el("div", "place-row unknown-place");
            row.appendChild(el("span", "place-name", name));
            row.appendChild(placeValue(net, marking[name]));
            table.appendChild(row);
        }
    }
    return table;
}

/** The system marking: shared places pinned in their own panel (they belong
 * to the system net no matter who reads them), the rest as a place list with
 * one recursive card per net token. */
export function renderMarking(net: NetInfo, marking: MarkingJson): HTMLElement {
    const root = el("div", "system-marking");
    const system = net.components[0];
    const sharedNames = system ? system.places.filter((p) => p.shared).map((p) => p.name) : [];

    const shared = el("div", "panel shared-panel");
    shared.appendChild(el("h3", undefined, "shared places"));
    const local = el("div", "panel places-panel");
    local.appendChild(el("h3", undefined, "system places"));

    const order = system ? system.places.map((p) => p.name) : Object.keys(marking);
    for (const name of order) {
        if (!(name in marking)) continue;
        const row = el("div", "place-row");
        row.appendChild(el("span", "place-name", name));
        row.appendChild(placeValue(net, marking[name]));
        (sharedNames.includes(name) ? shared : local).appendChild(row);
    }
    root.appendChild(shared);
    root.appendChild(local);
    return root;
}

export interface StepGroup {
    kind: string;
    transitions: string;
    steps: StepJson[];
}

/** Steps grouped by kind and participating transitions; the binding picker
 * for a group expands on demand since horizontal steps explode. */
export function groupSteps(steps: StepJson[]): StepGroup[] {
    const groups = new Map<string, StepGroup>();
    for (const step of steps) {
        const names = step.firings.map((f) => `${f.component}.${f.transition}`).join(" + ");
        const key = `${step.kind}|${names}`;
        let group = groups.get(key);
        if (!group) {
            group = { kind: step.kind, transitions: names, steps: [] };
            groups.set(key, group);
        }
        group.steps.push(step);
    }
    return [...groups.values()];
}

function bindingLabel(step: StepJson): string {
    const parts: string[] = [];
    for (const firing of step.firings) {
        const entries = Object.entries(firing.binding);
        if (!entries.length) continue;
        const inner = entries
            .map(([v, tok]) =>
                typeof tok === "string" ? `${v}=${tok}` : `${v}=${tok.component}#${tok.rtid}`)
            .join(", ");
        parts.push(`${firing.transition}{${inner}}`);
    }
    return parts.length ? parts.join("  ") : "(no variables)";
}

export function renderSteps(
    steps: StepJson[],
    onFire: (stepId: string) => void,
): HTMLElement {
    const root = el("div", "steps");
    const shown = steps.slice(0, STEP_DISPLAY_CAP);
    if (steps.length > STEP_DISPLAY_CAP) {
        root.appendChild(
            el("div", "cap-badge",
                `showing ${STEP_DISPLAY_CAP} of ${steps.length} steps`),
        );
    }
    if (!steps.length) {
        root.appendChild(el("div", "dead", "dead marking: no step enabled"));
        return root;
    }
    for (const kind of ["autonomous", "vertical", "horizontal"]) {
        const groups = groupSteps(shown.filter((s) => s.kind === kind));
        if (!groups.length) continue;
        const section = el("div", `step-kind kind-${kind}`);
        section.appendChild(el("h3", undefined, kind));
        for (const group of groups) {
            const box = el("div", "step-group");
            const head = el("div", "group-head", group.transitions);
            box.appendChild(head);
            const first = group.steps[0];
            const fire = el("button", "fire", "fire");
            fire.dataset.stepId = first.id;
            fire.addEventListener("click", () => onFire(first.id));
            head.appendChild(fire);
            if (group.steps.length > 1) {
                const toggle = el("button", "expand",
                    `${group.steps.length} bindings`);
                const list = el("div", "bindings hidden");
                for (const step of group.steps) {
                    const row = el("div", "binding-row", bindingLabel(step));
                    const btn = el("button", "fire", "fire");
                    btn.dataset.stepId = step.id;
                    btn.addEventListener("click", () => onFire(step.id));
                    row.appendChild(btn);
                    list.appendChild(row);
                }
                toggle.addEventListener("click", () =>
                    list.classList.toggle("hidden"));
                head.appendChild(toggle);
                box.appendChild(list);
            } else {
                head.appendChild(el("span", "one-binding", bindingLabel(first)));
            }
            section.appendChild(box);
        }
        root.appendChild(section);
    }
    return root;
}

export interface TimelineEntry {
    kind: string;
    label?: string;
    firings: { component: string; transition: string }[];
}

export function renderTimeline(entries: TimelineEntry[]): HTMLElement {
    const root = el("ol", "timeline");
    entries.forEach((entry, i) => {
        const li = el("li", `timeline-entry kind-${entry.kind}`);
        li.appendChild(el("span", "idx", String(i + 1)));
        // every transition of a synchronizing step is highlighted: the parent
        // and its children are one event
        for (const firing of entry.firings) {
            li.appendChild(
                el("span", "fired", `${firing.component}.${firing.transition}`),
            );
        }
        root.appendChild(li);
    });
    return root;
}
