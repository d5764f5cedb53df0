// Typed client for the nestpn serve API.  The UI never computes token-game
// semantics itself: every displayed fact comes from one of these endpoints.

export interface PlaceType {
    basic?: string;
    net?: string[];
}

export interface PlaceInfo {
    name: string;
    shared: boolean;
    type: PlaceType;
}

export interface TransitionInfo {
    name: string;
    label: string;
    inputs: string[];
    outputs: string[];
    inhibitors: string[];
}

export interface ComponentInfo {
    index: number;
    name: string;
    places: PlaceInfo[];
    transitions: TransitionInfo[];
}

export interface NetInfo {
    name: string;
    colorTypes: { name: string; values: string[] }[];
    labels: { name: string; kind: string; arity: number; complement: string }[];
    components: ComponentInfo[];
}

export interface NetTokenJson {
    component: string;
    rtid?: number;
    marking: MarkingJson;
}

export type PlaceMarking = number | string[] | NetTokenJson[];

export interface MarkingJson {
    [place: string]: PlaceMarking;
}

export interface StateJson {
    generation: number;
    marking: MarkingJson;
    depth: number;
    canUndo: boolean;
    canRedo: boolean;
}

export type BindingValue = string | { component: string; rtid: number };

export interface FiringJson {
    path: [string, number][];
    component: string;
    transition: string;
    binding: Record<string, BindingValue>;
}

export interface StepJson {
    id: string;
    kind: "autonomous" | "horizontal" | "vertical";
    label?: string;
    firings: FiringJson[];
}

export interface StepsJson {
    generation: number;
    steps: StepJson[];
}

export interface TraceStepJson extends Omit<StepJson, "id"> {
    result: MarkingJson;
}

export interface TraceJson {
    initial: MarkingJson;
    steps: TraceStepJson[];
}

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
    const res = await fetch(url, init);
    const body = await res.text();
    if (!res.ok) {
        let message = body;
        try {
            message = JSON.parse(body).error ?? body;
        } catch {
            // non-JSON error body: report as-is
        }
        throw new ApiError(res.status, message);
    }
    return JSON.parse(body) as T;
}

export class Client {
    constructor(private base: string = "") {}

    net(): Promise<NetInfo> {
        return request(this.base + "/net");
    }

    state(): Promise<StateJson> {
        return request(this.base + "/state");
    }

    steps(): Promise<StepsJson> {
        return request(this.base + "/steps");
    }

    trace(): Promise<TraceJson> {
        return request(this.base + "/trace");
    }

    private post(path: string, payload?: unknown): Promise<StateJson> {
        return request(this.base + path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(payload ?? {}),
        });
    }

    fire(stepId: string): Promise<StateJson> {
        return this.post("/fire", { stepId });
    }

    undo(): Promise<StateJson> {
        return this.post("/undo");
    }

    redo(): Promise<StateJson> {
        return this.post("/redo");
    }

    reset(): Promise<StateJson> {
        return this.post("/reset");
    }
}
