//! Prompt construction. Every builder is a pure function of its inputs and
//! serializes context as JSON with a fixed key order.

use serde_json::{json, Value};

use super::result::ActionRecord;
use super::{Plan, Query, Subtask};
use crate::pdetoolkit::{ResourcePool, ToolRegistry};
use crate::providers::PromptBundle;
use crate::toolgraph::ToolGraph;

const PLANNER_SYSTEM: &str = "You are the planner of a PDE-solving tool chain. Decompose the problem into subtasks, \
one tool call each, using only the tools in the registry (or `finalize` to mark the end). Reply with one JSON object \
{\"subtasks\": [{\"id\": <int, strictly increasing from 1>, \"tool\": <tool name>, \"goal\": <short reasoning>}]} and nothing else.";

const PARSER_SYSTEM: &str = "You are the parser/solver of a PDE-solving tool chain. Extract the parameters of one tool call \
from the problem and the work so far. Artifacts from earlier calls are referenced by their pool handles (e.g. `domain:1`); \
only handles listed in the pool may be used. Reply with one JSON object {\"params\": {...}} and nothing else; add \
\"assist\": <question> if you want the result reviewed.";

const ORCHESTRATOR_SYSTEM: &str = "You are the orchestrator of a PDE-solving tool chain. Review the recent actions and the \
flags raised by the mechanical checks. Reply with one JSON object: {\"verdict\": \"pass\"}, or {\"verdict\": \"retry\", \
\"subtask\": <id>, \"hint\": <text>} to rerun a subtask with the same parameters, or {\"verdict\": \"reparse\", \"subtask\": \
<id>, \"hint\": <text>} to extract its parameters again, or {\"verdict\": \"evict_redo\", \"node\": <node id>, \"hint\": \
<text>} to discard that node's artifacts and everything derived from them and redo it.";

fn render(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("prompt context serializes")
}

fn brief(r: &ActionRecord) -> Value {
    json!({
        "seq": r.seq,
        "subtask": r.subtask,
        "tool": r.tool,
        "status": r.status,
        "params": r.params,
        "handle": r.handle,
        "node": r.node,
        "summary": r.summary,
        "error": r.error,
        "diagnostics": r.diagnostics,
        "assist": r.assist,
    })
}

pub(super) fn graph_summary(graph: &ToolGraph, records: &[ActionRecord]) -> Value {
    let status = |node: &str| {
        records.iter().find(|r| r.node.as_ref().is_some_and(|n| n.as_str() == node)).map(|r| r.status)
    };
    json!({
        "nodes": graph.nodes().iter().map(|n| json!({"id": n.id, "tool": n.role, "seq": n.seq, "status": status(n.id.as_str())})).collect::<Vec<_>>(),
        "edges": graph.edges().iter().map(|e| json!([e.src, e.dst])).collect::<Vec<_>>(),
    })
}

pub(super) fn pool_listing(pool: &ResourcePool, records: &[ActionRecord]) -> Value {
    let listing: Vec<Value> = pool
        .live_handles()
        .map(|(h, e)| {
            let summary = records.iter().find(|r| r.handle == Some(*h)).map(|r| r.summary.as_str()).unwrap_or("");
            json!({"handle": h, "producer": e.producer, "summary": summary})
        })
        .collect();
    Value::Array(listing)
}

pub(super) fn planner(query: &Query, registry: &ToolRegistry, feedback: Option<&Value>, errors: &[String]) -> PromptBundle {
    let mut ctx = json!({
        "query": query,
        "tools": registry.schema_document()["tools"],
    });
    if let Some(f) = feedback {
        ctx["feedback"] = f.clone();
    }
    if !errors.is_empty() {
        ctx["rejected_because"] = json!(errors);
    }
    PromptBundle { system: PLANNER_SYSTEM.to_string(), user: render(&ctx) }
}

pub(super) struct ParserContext<'a> {
    pub query: &'a Query,
    pub plan: &'a Plan,
    pub subtask: &'a Subtask,
    pub records: &'a [ActionRecord],
    pub pool: &'a ResourcePool,
    pub registry: &'a ToolRegistry,
}

pub(super) fn parser(cx: &ParserContext, hint: Option<&str>, repair: Option<&str>) -> PromptBundle {
    let spec = cx.registry.spec(&cx.subtask.tool).map(|s| s.json_schema()).unwrap_or(Value::Null);
    let mut ctx = json!({
        "query": cx.query,
        "plan": cx.plan,
        "subtask": cx.subtask,
        "tool": spec,
        "actions": cx.records.iter().filter(|r| r.is_ok()).map(brief).collect::<Vec<_>>(),
        "pool": pool_listing(cx.pool, cx.records),
    });
    if let Some(h) = hint {
        ctx["hint"] = json!(h);
    }
    if let Some(e) = repair {
        ctx["previous_attempt_rejected"] = json!(e);
    }
    PromptBundle { system: PARSER_SYSTEM.to_string(), user: render(&ctx) }
}

pub(super) fn orchestrator(query: &Query, plan: &Plan, window: &[&ActionRecord], graph: Value, flags: &[String]) -> PromptBundle {
    let ctx = json!({
        "query": query,
        "plan": plan,
        "window": window.iter().map(|r| brief(r)).collect::<Vec<_>>(),
        "graph": graph,
        "flags": flags,
    });
    PromptBundle { system: ORCHESTRATOR_SYSTEM.to_string(), user: render(&ctx) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planner_prompt_is_pure() {
        let q = Query::new("Solve the heat equation").unwrap();
        let r = ToolRegistry::standard();
        assert_eq!(planner(&q, &r, None, &[]), planner(&q, &r, None, &[]));
        let with_errors = planner(&q, &r, None, &["unknown tool `define_mesh`".into()]);
        assert!(with_errors.user.contains("define_mesh"));
        assert!(planner(&q, &r, None, &[]).user.contains("\"define_pde\""));
    }
}
