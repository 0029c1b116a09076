import { HttpApi } from "./api.js";
import { AnnotationApp } from "./app.js";

function annotatorId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("annotator");
  if (fromQuery) return fromQuery;
  const answer = window.prompt("Annotator id:");
  if (!answer) throw new Error("an annotator id is required");
  return answer.trim();
}

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const app = new AnnotationApp(root, new HttpApi(""), annotatorId());
app.start().catch((err) => {
  root.textContent = `Failed to load session: ${err}`;
});
