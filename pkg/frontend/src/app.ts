/** Annotation form: one blinded A/B pair at a time.
 *
 * The app walks the annotator through their pending items, requiring all
 * five ratings before the submit button enables. A duplicate submission
 * (server already has a judgment for the pair) shows a notice and moves
 * on, since the first judgment wins.
 */
import type { ApiClient, BlindPair, JudgmentPayload } from "./api.js";

const FLUENCY_LABELS: Record<number, string> = {
  1: "incomprehensible",
  2: "disfluent",
  3: "understandable",
  4: "good",
  5: "flawless",
};

const GROUPS = [
  "preserved_a",
  "preserved_b",
  "fluency_a",
  "fluency_b",
  "preference",
] as const;

type GroupName = (typeof GROUPS)[number];

export class AnnotationApp {
  private readonly doc: Document;
  private currentItem: string | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly annotator: string,
  ) {
    this.doc = root.ownerDocument;
  }

  async start(): Promise<void> {
    const session = await this.api.session(this.annotator);
    if (session.next_item === null) {
      this.renderDone(session.total);
      return;
    }
    const pair = await this.api.item(session.next_item, this.annotator);
    this.currentItem = pair.item_id;
    this.renderForm(pair, session.completed + 1, session.total);
  }

  private renderDone(total: number): void {
    this.root.innerHTML = "";
    const p = this.el("p", "done");
    p.textContent = `All ${total} items annotated. Thank you.`;
    this.root.appendChild(p);
  }

  private renderForm(pair: BlindPair, position: number, total: number): void {
    this.root.innerHTML = "";

    const progress = this.el("p", "progress");
    progress.textContent = `Item ${position} of ${total} — annotator ${this.annotator}`;
    this.root.appendChild(progress);

    const source = this.el("div", "source");
    const sourceLabel = this.el("h2");
    sourceLabel.textContent = "English source";
    const sourceText = this.el("p");
    sourceText.lang = "en";
    sourceText.textContent = pair.source_en;
    source.append(sourceLabel, sourceText);
    this.root.appendChild(source);

    const form = this.doc.createElement("form");
    form.id = "judgment-form";
    form.append(
      this.sidePanel("A", pair.text_A, pair.fluency_scale),
      this.sidePanel("B", pair.text_B, pair.fluency_scale),
      this.preferencePanel(),
    );

    const notice = this.el("p", "notice");
    notice.id = "notice";
    notice.setAttribute("role", "status");

    const submit = this.doc.createElement("button");
    submit.type = "submit";
    submit.id = "submit";
    submit.disabled = true;
    submit.textContent = "Submit judgment";

    form.appendChild(submit);
    form.addEventListener("change", () => {
      submit.disabled = !this.formComplete();
    });
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit();
    });
    this.root.append(form, notice);
  }

  private sidePanel(side: "A" | "B", text: string, scale: number[]): HTMLElement {
    const key = side.toLowerCase();
    const panel = this.doc.createElement("fieldset");
    panel.className = "side";
    const legend = this.doc.createElement("legend");
    legend.textContent = `Translation ${side}`;
    const hindi = this.el("p", "hindi");
    hindi.lang = "hi";
    hindi.textContent = text;
    panel.append(legend, hindi);

    const preserved = this.radioGroup(
      `preserved_${key}` as GroupName,
      "Is the source referent's gender preserved?",
      [
        { value: "yes", label: "yes" },
        { value: "no", label: "no" },
      ],
    );
    const fluency = this.radioGroup(
      `fluency_${key}` as GroupName,
      "Fluency",
      scale.map((v) => ({ value: String(v), label: `${v} — ${FLUENCY_LABELS[v] ?? ""}` })),
    );
    panel.append(preserved, fluency);
    return panel;
  }

  private preferencePanel(): HTMLElement {
    return this.radioGroup("preference", "Which translation do you prefer overall?", [
      { value: "A", label: "A" },
      { value: "B", label: "B" },
      { value: "tie", label: "tie" },
    ]);
  }

  private radioGroup(
    name: GroupName,
    legendText: string,
    options: { value: string; label: string }[],
  ): HTMLElement {
    const group = this.doc.createElement("fieldset");
    group.className = "choices";
    const legend = this.doc.createElement("legend");
    legend.textContent = legendText;
    group.appendChild(legend);
    for (const opt of options) {
      const id = `${name}-${opt.value}`;
      const input = this.doc.createElement("input");
      input.type = "radio";
      input.name = name;
      input.value = opt.value;
      input.id = id;
      const label = this.doc.createElement("label");
      label.htmlFor = id;
      label.textContent = opt.label;
      const row = this.el("div", "choice");
      row.append(input, label);
      group.appendChild(row);
    }
    return group;
  }

  private checkedValue(name: GroupName): string | null {
    const input = this.root.querySelector<HTMLInputElement>(
      `input[name="${name}"]:checked`,
    );
    return input ? input.value : null;
  }

  private formComplete(): boolean {
    return GROUPS.every((name) => this.checkedValue(name) !== null);
  }

  private async submit(): Promise<void> {
    if (!this.currentItem || !this.formComplete()) return;
    const payload: JudgmentPayload = {
      item_id: this.currentItem,
      annotator_id: this.annotator,
      preserved_a: this.checkedValue("preserved_a") === "yes",
      preserved_b: this.checkedValue("preserved_b") === "yes",
      fluency_a: Number(this.checkedValue("fluency_a")),
      fluency_b: Number(this.checkedValue("fluency_b")),
      preference: this.checkedValue("preference") as "A" | "B" | "tie",
    };
    const outcome = await this.api.submit(payload);
    if (outcome === "duplicate") {
      const notice = this.doc.getElementById("notice");
      if (notice) {
        notice.textContent = "This item was already judged; keeping the first judgment.";
      }
    }
    await this.start();
  }

  private el(tag: string, className?: string): HTMLElement {
    const node = this.doc.createElement(tag);
    if (className) node.className = className;
    return node;
  }
}
