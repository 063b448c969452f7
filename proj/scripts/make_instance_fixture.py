"""Writes the 10-record instance fixture and the scripted model, competitor and judge."""
import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"

OBS = {
    ("Schema", "orders"): "| table | column | type | constraints |\n|---|---|---|---|\n| orders | id | integer | primary key |\n| orders | customer_id | integer | references customers(id) |\n| orders | amount | numeric |  |\n| orders | status | text |  |",
    ("Schema", "customers"): "| table | column | type | constraints |\n|---|---|---|---|\n| customers | id | integer | primary key |\n| customers | name | text |  |\n| customers | region | text |  |",
    ("Selection", "SELECT COUNT(*) FROM orders"): "| count |\n|---|\n| 5 |",
    ("Selection", "SELECT status, COUNT(*) FROM orders GROUP BY status"): "| status | count |\n|---|---|\n| paid | 3 |\n| pending | 2 |",
    ("Resource", "cpu"): "| metric | value |\n|---|---|\n| cpu_usage | 87% |",
    ("Resource", "memory"): "| metric | value |\n|---|---|\n| memory_usage | 62% |",
    ("Workload", "slow_queries"): "| query | mean_ms | calls |\n|---|---|---|\n| SELECT * FROM orders WHERE status = 'pending' | 1840 | 120 |",
    ("Workload", "deadlock"): "ERROR: deadlock detected on relation orders",
    ("Status", "indexes"): "| index | table | columns |\n|---|---|---|\n| orders_pkey | orders | id |\n| customers_pkey | customers | id |",
    ("Status", "work_mem"): "| knob | setting |\n|---|---|\n| work_mem | 4MB |",
    ("Tuning", "orders"): "| recommendation | reason |\n|---|---|\n| CREATE INDEX ON orders (status); | slow query filters on status (mean 1840 ms) |",
}

# (id, question, ground-truth chain, model script kind)
RECORDS = [
    ("inst-01", "How many rows does the orders table hold and what are its columns?",
     [("Schema", "orders"), ("Selection", "SELECT COUNT(*) FROM orders")], "full"),
    ("inst-02", "Is the CPU of the instance saturated right now?", [("Resource", "cpu")], "full"),
    ("inst-03", "Which slow queries hurt the instance and how should they be tuned?",
     [("Workload", "slow_queries"), ("Tuning", "orders")], "wrong_first"),
    ("inst-04", "Describe the orders table, its status mix and the index it is missing.",
     [("Schema", "orders"), ("Selection", "SELECT status, COUNT(*) FROM orders GROUP BY status"),
      ("Tuning", "orders")], "wrong_third"),
    ("inst-05", "Which indexes exist on this instance?", [("Status", "indexes")], "garbage"),
    ("inst-06", "Count the orders and break them down by status.",
     [("Selection", "SELECT COUNT(*) FROM orders"),
      ("Selection", "SELECT status, COUNT(*) FROM orders GROUP BY status")], "full"),
    ("inst-07", "Was there a deadlock recently and is memory under pressure?",
     [("Workload", "deadlock"), ("Resource", "memory")], "early_final"),
    ("inst-08", "What columns does the customers table have?", [("Schema", "customers")], "full"),
    ("inst-09", "What is work_mem set to and what index should orders get?",
     [("Status", "work_mem"), ("Tuning", "orders")], "missing_input"),
    ("inst-10", "Check CPU, the slow query log and the current indexes.",
     [("Resource", "cpu"), ("Workload", "slow_queries"), ("Status", "indexes")], "full"),
]

# Judge behaviour per record: format verdicts for matched steps, then pair verdict.
FORMAT_NO = {("inst-04", 1)}
PAIR = {"inst-03": "TIE", "inst-05": "B", "inst-09": "TIE"}


def step(thought, tool, arg):
    return f"Thought: {thought}\nAction: {tool}\nAction_Input: {arg}"


def final(text):
    return f"Thought: I now know the final answer\nFinal_Answer: {text}"


def reference(chain, answer):
    lines = []
    for tool, arg in chain:
        lines += [f"Thought: use {tool}", f"Action: {tool}", f"Action_Input: {arg}", f"Observation: {OBS[(tool, arg)]}"]
    lines.append(f"Final_Answer: {answer}")
    return "\n".join(lines)


def model_script(rid, q, chain, kind):
    out = []
    def add(resp):
        out.append({"match": q, "response": resp})
    if kind == "full":
        for tool, arg in chain:
            add(step(f"I should call {tool}", tool, arg))
        add(final(f"Answer for {rid}."))
    elif kind == "wrong_first":
        add(step("Check the knobs first", "Status", "knobs"))
    elif kind == "wrong_third":
        add(step("Look at the table", *chain[0]))
        add(step("Count statuses", *chain[1]))
        add(step("Look at slow queries", "Workload", "slow_queries"))
    elif kind == "garbage":
        add("I think the indexes are fine.")
    elif kind == "early_final":
        add(step("Search the log", *chain[0]))
        add(final("There was one deadlock."))
    elif kind == "missing_input":
        add(step("Read the knob", *chain[0]))
        add("Thought: now tune\nAction: Tuning")
    return out


def competitor_script(rid, q, chain):
    wrong = "Schema" if chain[0][0] != "Schema" else "Resource"
    return [{"match": q, "response": step("Guess", wrong, "all")}]


def main():
    inst, model, comp, judge = [], [], [], []
    expected_prefix = {"full": None, "wrong_first": 0, "wrong_third": 2, "garbage": 0, "early_final": 1,
                       "missing_input": 1}
    for rid, q, chain, kind in RECORDS:
        inst.append({"id": rid, "lang": "en", "category": "instance", "question": q,
                     "reference_answer": reference(chain, f"Reference answer for {rid}."),
                     "source": "fixture",
                     "tool_chain": [{"tool": t, "action_input": a, "observation": OBS[(t, a)]} for t, a in chain]})
        model += model_script(rid, q, chain, kind)
        comp += competitor_script(rid, q, chain)
        matched = expected_prefix[kind] if expected_prefix[kind] is not None else len(chain)
        for i in range(matched):
            verdict = "NO" if (rid, i) in FORMAT_NO else "YES"
            judge.append({"match": "Required input format", "response": verdict})
            if verdict == "NO":
                break
        judge.append({"match": "Answer A:", "response": PAIR.get(rid, "A")})
    for name, rows in [("inst.jsonl", inst), ("inst_model_script.jsonl", model),
                       ("inst_competitor_script.jsonl", comp), ("inst_judge_script.jsonl", judge)]:
        (OUT / name).write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows))


if __name__ == "__main__":
    main()
