import { ApiClient } from "./api.js";
import { decisionBarsSvg, errorChartSvg, weightChartSvg } from "./charts.js";
import { startLiveUpdates, type LiveHandle } from "./live.js";
import { ConsoleStore } from "./store.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("service") ?? "http://127.0.0.1:8321";
const pollMs = Number(params.get("poll") ?? "1000");

const api = new ApiClient(baseUrl);
const store = new ConsoleStore(api);
let live: LiveHandle | null = null;

const app = document.querySelector<HTMLDivElement>("#app")!;
app.innerHTML = `
  <header>
    <h1>Oracle review console</h1>
    <div id="service-info">service: ${baseUrl}</div>
  </header>
  <main>
    <aside>
      <h2>Sessions</h2>
      <ul id="session-list"></ul>
    </aside>
    <section>
      <div id="notices"></div>
      <h2>Pending review</h2>
      <div id="cards"></div>
      <h2>Weight trajectories</h2>
      <div id="weight-chart"></div>
      <h2>Squared error</h2>
      <div id="error-chart"></div>
    </section>
  </main>
`;

const sessionList = document.querySelector<HTMLUListElement>("#session-list")!;
const cardsHost = document.querySelector<HTMLDivElement>("#cards")!;
const noticesHost = document.querySelector<HTMLDivElement>("#notices")!;
const weightHost = document.querySelector<HTMLDivElement>("#weight-chart")!;
const errorHost = document.querySelector<HTMLDivElement>("#error-chart")!;

function render(): void {
  const state = store.getState();

  sessionList.innerHTML = "";
  for (const session of state.sessions) {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.textContent = `${session.session_id} (${session.algorithm}, pending ${session.pending})`;
    button.className = session.session_id === state.selected ? "selected" : "";
    button.addEventListener("click", () => {
      void selectSession(session.session_id);
    });
    item.appendChild(button);
    sessionList.appendChild(item);
  }

  noticesHost.innerHTML = "";
  for (const notice of state.notices.slice(-3)) {
    const div = document.createElement("div");
    div.className = `notice notice-${notice.kind}`;
    div.textContent = notice.text;
    noticesHost.appendChild(div);
  }

  cardsHost.innerHTML = "";
  if (state.cards.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No events awaiting review.";
    cardsHost.appendChild(empty);
  }
  for (const card of state.cards) {
    const div = document.createElement("div");
    div.className = "card";
    const bars = decisionBarsSvg(card.event.decisions);
    div.innerHTML = `
      <div class="card-head">
        <strong>${card.event.event_id}</strong>
        <span>step ${card.event.step}</span>
      </div>
      <div class="bars">${bars}</div>
    `;
    const confirm = document.createElement("button");
    confirm.textContent = card.retryable ? "confirm (retry)" : "confirm +1";
    confirm.addEventListener("click", () => void store.confirm(card.event.event_id));
    const reject = document.createElement("button");
    reject.textContent = card.retryable ? "reject (retry)" : "reject -1";
    reject.addEventListener("click", () => void store.reject(card.event.event_id));
    const actions = document.createElement("div");
    actions.className = "actions";
    actions.append(confirm, reject);
    div.appendChild(actions);
    cardsHost.appendChild(div);
  }

  weightHost.innerHTML = weightChartSvg(store.weightSeries());
  errorHost.innerHTML = errorChartSvg(store.errorSeries());
}

async function selectSession(sessionId: string): Promise<void> {
  live?.stop();
  await store.select(sessionId);
  live = startLiveUpdates(baseUrl, sessionId, () => void safeRefresh(), { pollMs });
}

async function safeRefresh(): Promise<void> {
  try {
    await store.refresh();
    await store.refreshSessions();
  } catch {
    store.pushNotice({ kind: "error", text: "service unreachable; retrying" });
  }
}

store.subscribe(render);
void (async () => {
  try {
    await store.refreshSessions();
    const first = store.getState().sessions[0];
    if (first) await selectSession(first.session_id);
  } catch {
    store.pushNotice({ kind: "error", text: `cannot reach service at ${baseUrl}` });
  }
})();
