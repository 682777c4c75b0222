import { Client } from "./api.js";
import { Controller } from "./controller.js";
import { renderApp } from "./view.js";
// Served by the tournament service itself, so the API lives at the same
// origin and asset paths are relative.
const client = new Client("");
function sessionRater() {
    const key = "beamlat-rater";
    const existing = sessionStorage.getItem(key);
    if (existing)
        return existing;
    const fresh = `rater-${crypto.randomUUID().slice(0, 8)}`;
    sessionStorage.setItem(key, fresh);
    return fresh;
}
const app = document.getElementById("app");
const controller = new Controller(client, sessionRater(), (state) => {
    app.innerHTML = renderApp(state, (name) => client.assetUrl(name));
    wire();
});
function wire() {
    for (const button of app.querySelectorAll("[data-verdict]")) {
        button.addEventListener("click", () => {
            void controller.submit(button.dataset.verdict);
        });
    }
    // Block verdicts until every tile is in: a half-loaded pairing is not a
    // fair comparison, and a 404 tile must keep the gate shut.
    const images = [...app.querySelectorAll("img[data-asset]")];
    if (controller.state.phase === "pairing" && controller.state.assetGate === "pending") {
        let pending = 0;
        let failed = false;
        const settle = () => {
            if (pending === 0)
                controller.setAssetGate(failed ? "failed" : "ready");
        };
        for (const img of images) {
            if (img.complete && img.naturalWidth > 0)
                continue;
            pending += 1;
            img.addEventListener("load", () => {
                pending -= 1;
                settle();
            });
            img.addEventListener("error", () => {
                pending -= 1;
                failed = true;
                img.classList.add("broken");
                settle();
            });
        }
        settle();
    }
}
void controller.refresh();
setInterval(() => {
    // Other raters may resolve the open pairing; poll so the view follows.
    if (!controller.state.submitting)
        void controller.refresh();
}, 5000);
