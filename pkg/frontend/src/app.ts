// Session wiring: one in-flight mutation at a time, a full state+steps
// refetch after every mutation, and a non-fatal notice on stale-step races.

import { ApiError, Client, NetInfo, StateJson, StepsJson, TraceJson } from "./api.js";
import { renderMarking, renderSteps, renderTimeline, TimelineEntry } from "./render.js";

export interface AppElements {
    marking: HTMLElement;
    steps: HTMLElement;
    timeline: HTMLElement;
    notice: HTMLElement;
    undo: HTMLButtonElement;
    redo: HTMLButtonElement;
    reset: HTMLButtonElement;
    exportBtn: HTMLButtonElement;
}

export class App {
    net!: NetInfo;
    state!: StateJson;
    steps!: StepsJson;
    timeline: TimelineEntry[] = [];
    private queue: Promise<unknown> = Promise.resolve();

    constructor(private client: Client, private ui: AppElements) {}

    async start(): Promise<void> {
        this.net = await this.client.net();
        await this.refresh();
        this.ui.undo.addEventListener("click", () => this.undo());
        this.ui.redo.addEventListener("click", () => this.redo());
        this.ui.reset.addEventListener("click", () => this.reset());
        this.ui.exportBtn.addEventListener("click", () => void this.exportTrace());
    }

    /** Serialize mutations: the next one starts only after the previous one,
     * and its refetch, finished. */
    enqueue<T>(action: () => Promise<T>): Promise<T> {
        const next = this.queue.then(action);
        this.queue = next.then(
            () => undefined,
            () => undefined,
        );
        return next;
    }

    async refresh(): Promise<void> {
        const [state, steps] = await Promise.all([
            this.client.state(),
            this.client.steps(),
        ]);
        this.state = state;
        this.steps = steps;
        this.render();
    }

    private async rebuildTimeline(): Promise<void> {
        const trace: TraceJson = await this.client.trace();
        this.timeline = trace.steps.map((s) => ({
            kind: s.kind,
            label: s.label,
            firings: s.firings.map((f) => ({
                component: f.component,
                transition: f.transition,
            })),
        }));
    }

    private mutate(go: () => Promise<StateJson>): Promise<void> {
        return this.enqueue(async () => {
            try {
                await go();
                this.clearNotice();
            } catch (err) {
                if (err instanceof ApiError && err.status === 409) {
                    // the marking moved under us: tell, refetch, carry on
                    this.notice(`step is stale: ${err.message}`);
                } else {
                    this.notice(`request failed: ${String(err)}`);
                }
            }
            await this.rebuildTimeline();
            await this.refresh();
        });
    }

    fire(stepId: string): Promise<void> {
        return this.mutate(() => this.client.fire(stepId));
    }

    undo(): Promise<void> {
        return this.mutate(() => this.client.undo());
    }

    redo(): Promise<void> {
        return this.mutate(() => this.client.redo());
    }

    reset(): Promise<void> {
        return this.mutate(() => this.client.reset());
    }

    async exportTrace(): Promise<string> {
        const trace = await this.client.trace();
        const text = JSON.stringify(trace, null, 2) + "\n";
        const blob = new Blob([text], { type: "application/json" });
        const link = document.createElement("a");
        link.href = URL.createObjectURL(blob);
        link.download = `${this.net.name}-trace.json`;
        link.click();
        URL.revokeObjectURL(link.href);
        return text;
    }

    notice(message: string): void {
        this.ui.notice.textContent = message;
        this.ui.notice.classList.remove("hidden");
    }

    clearNotice(): void {
        this.ui.notice.textContent = "";
        this.ui.notice.classList.add("hidden");
    }

    render(): void {
        this.ui.marking.replaceChildren(renderMarking(this.net, this.state.marking));
        this.ui.steps.replaceChildren(
            renderSteps(this.steps.steps, (id) => void this.fire(id)),
        );
        this.ui.timeline.replaceChildren(renderTimeline(this.timeline));
        this.ui.undo.disabled = !this.state.canUndo;
        this.ui.redo.disabled = !this.state.canRedo;
    }
}
