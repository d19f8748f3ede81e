"""Drive the expert review service over HTTP, in process.

Builds a tiny teacher-annotated corpus, starts the review server on a free
port, accepts one task and corrects another through the JSON API, then
exports the validated segments — exactly what the browser UI does.

Run with:  python3 demos/review_workflow.py
"""

import json
import tempfile
import threading
import urllib.request

from tagdistill import review
from tagdistill.corpus import Document, Segment
from tagdistill.scenario import ClinicalScenario

scenario = ClinicalScenario(
    id="demo", name="Demo", system_message="m", output_instruction="o",
    labels=("FINDING", "PLAN"))
documents = [
    Document("d0", "demo", "Widoczny guzek w kwadrancie gornym."),
    Document("d1", "demo", "Zalecana kontrola za 6 miesiecy."),
]
teacher_segments = [
    Segment("d0", "FINDING", 0, 35, "teacher", "llama"),
    Segment("d1", "FINDING", 0, 32, "teacher", "llama"),  # wrong label
]

with tempfile.TemporaryDirectory() as tmp:
    log = review.EventLog(f"{tmp}/events.log")
    store = review.ReviewStore(scenario, documents, teacher_segments, log)
    server = review.create_server(store, port=0)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    print(f"review service listening at {base}\n")

    def get(path):
        with urllib.request.urlopen(base + path) as resp:
            return json.load(resp)

    def post(path, payload):
        req = urllib.request.Request(
            base + path, data=json.dumps(payload).encode(),
            headers={"Content-Type": "application/json"})
        with urllib.request.urlopen(req) as resp:
            return json.load(resp)

    print("pending tasks:", [t["task_id"]
                             for t in get("/api/scenarios/demo/tasks")["tasks"]])

    print("\naccepting d0 as-is ...")
    post("/api/tasks/d0/verdict", {"status": "accepted", "reviewer": "demo"})

    print("correcting d1 (FINDING -> PLAN) ...")
    post("/api/tasks/d1/verdict", {
        "status": "corrected",
        "segments": [{"label": "PLAN", "start": 0, "end": 32}],
        "reviewer": "demo",
    })

    progress = get("/api/scenarios/demo/progress")
    print("\nprogress:", json.dumps(progress, indent=2))

    print("exported validated segments:")
    with urllib.request.urlopen(
            base + "/api/scenarios/demo/export?kind=all") as resp:
        for line in resp.read().decode().splitlines():
            print(" ", line)

    server.shutdown()
    server.server_close()
    log.close()
