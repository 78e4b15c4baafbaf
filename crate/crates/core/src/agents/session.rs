use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::Deserialize;
use serde_json::{json, Value};
use tracing::{debug, info, warn};

use super::plan::{Plan, Query, Subtask, FINALIZE};
use super::prompts::{self, ParserContext};
use super::result::{compose_answer, ActionRecord, RecordError, RecordStatus, SessionEvent, SessionResult, SessionStats, SessionStatus};
use super::{AgentError, Mode, ProgActConfig};
use crate::pdetoolkit::{invoke, DiagnosticLevel, Handle, ParamSet, ResourcePool, ToolRegistry, ToolSpec};
use crate::providers::{ChatProvider, Completion, PromptBundle, Role, SchemaId};
use crate::toolgraph::{NodeId, ToolGraph};

#[derive(Debug, Clone)]
pub struct SessionOptions {
    pub session_id: String,
    /// Directory tools may write into (exports).
    pub workdir: PathBuf,
}

/// Why the current plan cannot continue.
enum Flow {
    Fail(String),
    Escalate(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case", deny_unknown_fields)]
enum Directive {
    Pass,
    Retry {
        subtask: u32,
        #[serde(default)]
        hint: String,
    },
    Reparse {
        subtask: u32,
        #[serde(default)]
        hint: String,
    },
    EvictRedo {
        node: NodeId,
        #[serde(default)]
        hint: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FlagKind {
    Failed,
    Stale,
    Dangling,
    Warning,
    Assist,
}

struct Flag {
    kind: FlagKind,
    text: String,
}

impl Flag {
    fn blocking(&self) -> bool {
        matches!(self.kind, FlagKind::Failed | FlagKind::Stale | FlagKind::Dangling)
    }
}

enum ParamSource<'h> {
    Parse(Option<&'h str>),
    Reuse,
}

struct Engine<'a> {
    query: &'a Query,
    registry: &'a ToolRegistry,
    provider: &'a dyn ChatProvider,
    cfg: ProgActConfig,
    opts: &'a SessionOptions,
    plan: Option<Plan>,
    pool: ResourcePool,
    memory: ToolGraph,
    records: Vec<ActionRecord>,
    /// Latest record index per subtask id of the current plan.
    current: BTreeMap<u32, usize>,
    events: Vec<SessionEvent>,
    stats: SessionStats,
    seq: u32,
    role_steps: BTreeMap<Role, u32>,
    /// Old handle -> replacement, for replaying parameters after eviction.
    remap: BTreeMap<Handle, Handle>,
    failures: BTreeMap<(u32, String), u32>,
    rejected: u32,
    acknowledged: BTreeSet<u32>,
    window_start: usize,
    since_last: u32,
}

pub fn run_session(
    query: &Query,
    registry: &ToolRegistry,
    provider: &dyn ChatProvider,
    cfg: &ProgActConfig,
    opts: &SessionOptions,
) -> Result<SessionResult, AgentError> {
    query.validate()?;
    let cfg = cfg.clone().effective();
    cfg.validate()?;
    if registry.names().is_empty() {
        return Err(AgentError::Config("the tool registry is empty".into()));
    }
    let mut engine = Engine {
        query,
        registry,
        provider,
        cfg,
        opts,
        plan: None,
        pool: ResourcePool::new(opts.session_id.clone()),
        memory: ToolGraph::new(),
        records: Vec::new(),
        current: BTreeMap::new(),
        events: Vec::new(),
        stats: SessionStats::default(),
        seq: 0,
        role_steps: BTreeMap::new(),
        remap: BTreeMap::new(),
        failures: BTreeMap::new(),
        rejected: 0,
        acknowledged: BTreeSet::new(),
        window_start: 0,
        since_last: 0,
    };
    info!(session = %opts.session_id, mode = ?engine.cfg.mode, "session start");
    let outcome = engine.drive();
    Ok(engine.finish(outcome))
}

impl<'a> Engine<'a> {
    fn drive(&mut self) -> Result<(), String> {
        let plan = self.make_plan(None).map_err(flow_message)?;
        self.install_plan(plan, Vec::new());
        loop {
            match self.execute_plan() {
                Ok(()) => return Ok(()),
                Err(Flow::Fail(message)) => return Err(message),
                Err(Flow::Escalate(reason)) => {
                    warn!(%reason, "escalating to replan");
                    self.events.push(SessionEvent::Escalation { reason: reason.clone() });
                    if self.stats.replans >= self.cfg.outer_replan_budget {
                        return Err(format!("escalated ({reason}) with no replan budget left"));
                    }
                    self.replan(&reason).map_err(flow_message)?;
                }
            }
        }
    }

    fn plan(&self) -> &Plan {
        self.plan.as_ref().expect("plan installed before execution")
    }

    fn call(&mut self, role: Role, prompt: &PromptBundle, schema: SchemaId) -> Result<Completion, Flow> {
        let step = self.role_steps.entry(role).or_insert(0);
        let this = *step;
        *step += 1;
        *self.stats.provider_calls.entry(role.to_string()).or_insert(0) += 1;
        debug!(%role, step = this, "provider call");
        self.provider.complete(role, prompt, schema, this).map_err(|e| Flow::Fail(format!("{role} provider: {e}")))
    }

    fn make_plan(&mut self, feedback: Option<&Value>) -> Result<Plan, Flow> {
        let revision = self.plan.as_ref().map_or(0, |p| p.revision + 1);
        let mut errors: Vec<String> = Vec::new();
        for _ in 0..2 {
            let prompt = prompts::planner(self.query, self.registry, feedback, &errors);
            errors = match self.call(Role::Planner, &prompt, SchemaId::Plan)? {
                Completion::Malformed { reason, .. } => vec![reason],
                Completion::Record(v) => match Plan::from_record(&v, revision, self.registry, self.cfg.max_subtasks) {
                    Ok(plan) => return Ok(plan),
                    Err(errs) => errs,
                },
            };
            warn!(?errors, "planner output rejected");
        }
        Err(Flow::Fail(format!("planner output invalid after retry: {}", errors.join("; "))))
    }

    fn install_plan(&mut self, plan: Plan, carried: Vec<u32>) {
        self.events.push(SessionEvent::Plan { revision: plan.revision, subtasks: plan.subtasks.iter().map(|s| s.id).collect() });
        if plan.revision > 0 {
            self.events.push(SessionEvent::Replan { revision: plan.revision, carried });
        }
        self.plan = Some(plan);
        self.window_start = self.records.len();
        self.since_last = 0;
    }

    fn execute_plan(&mut self) -> Result<(), Flow> {
        let subtasks = self.plan().subtasks.clone();
        for sub in &subtasks {
            if sub.tool == FINALIZE || self.latest(sub.id).is_some_and(ActionRecord::is_ok) {
                continue;
            }
            let idx = self.execute(sub, ParamSource::Parse(None), "plan")?;
            self.since_last += 1;
            let rec = &self.records[idx];
            if self.cfg.mode == Mode::Static {
                if let Some(e) = rec.error.as_ref().filter(|_| !rec.is_ok()) {
                    return Err(Flow::Fail(format!("subtask {} ({}) failed: {}", rec.subtask, rec.tool, e.message)));
                }
                continue;
            }
            let trigger = if !rec.is_ok() {
                Some("failure".to_string())
            } else if rec.assist.is_some() {
                Some("assist".to_string())
            } else if self.cfg.critical_tools.iter().any(|t| *t == rec.tool) {
                Some(format!("critical:{}", rec.tool))
            } else if self.since_last >= self.cfg.checkpoint_every {
                Some("cadence".to_string())
            } else {
                None
            };
            if let Some(trigger) = trigger {
                self.checkpoint(trigger)?;
            }
        }
        if self.cfg.mode != Mode::Static && self.since_last > 0 {
            self.checkpoint("final".into())?;
        }
        Ok(())
    }

    fn latest(&self, subtask: u32) -> Option<&ActionRecord> {
        self.current.get(&subtask).map(|&i| &self.records[i])
    }

    fn execute(&mut self, sub: &Subtask, source: ParamSource, origin: &str) -> Result<usize, Flow> {
        let previous = self.latest(sub.id).cloned();
        let params = match source {
            ParamSource::Reuse => match previous.as_ref().and_then(|r| r.params.clone()) {
                Some(mut p) => {
                    p.remap_handles(&self.remap);
                    Ok((p, None))
                }
                None => self.parse_params(sub, None)?,
            },
            ParamSource::Parse(hint) => self.parse_params(sub, hint)?,
        };
        self.seq += 1;
        let seq = self.seq;
        let revision = self.plan().revision;
        let mut rec = ActionRecord {
            seq,
            subtask: sub.id,
            tool: sub.tool.clone(),
            plan_revision: revision,
            params: None,
            status: RecordStatus::Failed,
            handle: None,
            summary: String::new(),
            value: None,
            error: None,
            diagnostics: Vec::new(),
            assist: None,
            node: None,
            origin: origin.to_string(),
        };
        match params {
            Err(e) => {
                rec.summary = e.message.clone();
                rec.error = Some(e);
            }
            Ok((p, assist)) => {
                rec.assist = assist;
                let node = NodeId::for_seq(seq);
                match invoke(self.registry, &sub.tool, &p, &mut self.pool, &node, seq, &self.opts.workdir) {
                    Ok(out) => {
                        rec.params = Some(p);
                        rec.status = RecordStatus::Ok;
                        rec.handle = Some(out.handle);
                        rec.summary = out.summary;
                        rec.value = out.value;
                        rec.diagnostics = out.diagnostics;
                        let id = self.memory.add_action_node(&rec).map_err(|e| Flow::Fail(format!("graph memory: {e}")))?;
                        rec.node = Some(id);
                        if let Some(old) = previous.as_ref().and_then(|r| r.handle) {
                            self.record_replacement(old, out.handle);
                        }
                    }
                    Err(e) => {
                        rec.params = Some(p);
                        rec.summary = e.to_string();
                        rec.error = Some(RecordError { kind: e.kind().to_string(), message: e.to_string() });
                    }
                }
            }
        }
        if let Some(e) = rec.error.as_ref() {
            debug!(seq, tool = %rec.tool, error = %e.message, "action failed");
            *self.failures.entry((sub.id, e.message.clone())).or_insert(0) += 1;
        }
        self.records.push(rec);
        let idx = self.records.len() - 1;
        self.current.insert(sub.id, idx);
        Ok(idx)
    }

    fn record_replacement(&mut self, old: Handle, new: Handle) {
        for target in self.remap.values_mut() {
            if *target == old {
                *target = new;
            }
        }
        self.remap.insert(old, new);
    }

    /// Asks the parser for parameters, with one repair round that echoes the
    /// rejection. The inner result is the record-level failure, if any.
    #[allow(clippy::type_complexity)]
    fn parse_params(&mut self, sub: &Subtask, hint: Option<&str>) -> Result<Result<(ParamSet, Option<String>), RecordError>, Flow> {
        let spec = self.registry.spec(&sub.tool).expect("plan tools are registered");
        let mut repair: Option<String> = None;
        let mut last = None;
        for _ in 0..2 {
            let prompt = {
                let cx = ParserContext {
                    query: self.query,
                    plan: self.plan(),
                    subtask: sub,
                    records: &self.records,
                    pool: &self.pool,
                    registry: self.registry,
                };
                prompts::parser(&cx, hint, repair.as_deref())
            };
            let err = match self.call(Role::Parser, &prompt, SchemaId::Params)? {
                Completion::Malformed { reason, .. } => RecordError { kind: "malformed".into(), message: reason },
                Completion::Record(v) => match self.check_params(spec, &v) {
                    Ok(ok) => return Ok(Ok(ok)),
                    Err(e) => e,
                },
            };
            debug!(tool = %sub.tool, error = %err.message, "parameters rejected");
            repair = Some(err.message.clone());
            last = Some(err);
        }
        Ok(Err(last.expect("two attempts made")))
    }

    fn check_params(&self, spec: &ToolSpec, record: &Value) -> Result<(ParamSet, Option<String>), RecordError> {
        let malformed = |m: String| RecordError { kind: "malformed".into(), message: m };
        let obj = record.as_object().ok_or_else(|| malformed("parameter record is not an object".into()))?;
        if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "params" | "assist")) {
            return Err(malformed(format!("unexpected key `{k}` in parameter record")));
        }
        let params = obj.get("params").ok_or_else(|| malformed("parameter record has no `params`".into()))?;
        let assist = match obj.get("assist") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(malformed("`assist` must be a string".into())),
        };
        let set = spec.validate(params).map_err(|v| RecordError { kind: "schema".into(), message: v.to_string() })?;
        for h in set.all_handles() {
            if let Err(e) = self.pool.get(&h) {
                return Err(RecordError { kind: "dangling_handle".into(), message: format!("{}: {e}", spec.name) });
            }
        }
        Ok((set, assist))
    }

    fn flags(&self) -> Vec<Flag> {
        let mut flags = Vec::new();
        for sub in &self.plan().subtasks {
            let Some(r) = self.latest(sub.id) else { continue };
            match r.status {
                RecordStatus::Failed => flags.push(Flag {
                    kind: FlagKind::Failed,
                    text: format!("subtask {} ({}) failed: {}", r.subtask, r.tool, r.summary),
                }),
                RecordStatus::Invalidated => flags.push(Flag {
                    kind: FlagKind::Stale,
                    text: format!("subtask {} ({}) was invalidated and not redone", r.subtask, r.tool),
                }),
                RecordStatus::Ok => {
                    if let Some(h) = r.handle.filter(|h| !self.pool.is_live(h)) {
                        flags.push(Flag { kind: FlagKind::Dangling, text: format!("subtask {} ({}) output {h} is gone", r.subtask, r.tool) });
                    }
                }
            }
        }
        for r in &self.records[self.window_start..] {
            if !r.is_ok() || self.acknowledged.contains(&r.seq) || self.latest(r.subtask).map(|l| l.seq) != Some(r.seq) {
                continue;
            }
            for d in r.diagnostics.iter().filter(|d| d.level == DiagnosticLevel::Warning) {
                flags.push(Flag { kind: FlagKind::Warning, text: format!("subtask {} ({}) warning: {}", r.subtask, r.tool, d.message) });
            }
            if let Some(a) = &r.assist {
                flags.push(Flag { kind: FlagKind::Assist, text: format!("subtask {} ({}) requests review: {a}", r.subtask, r.tool) });
            }
        }
        flags
    }

    fn collapsed(&self) -> Option<String> {
        self.failures
            .iter()
            .find(|(_, &n)| n >= self.cfg.collapse_after)
            .map(|((k, msg), n)| format!("subtask {k} failed {n} times with: {msg}"))
    }

    fn checkpoint(&mut self, mut trigger: String) -> Result<(), Flow> {
        let mut corrections = 0;
        self.stats.validation_events += 1;
        let index = self.stats.validation_events;
        for round in 0.. {
            if round > 0 {
                self.stats.rechecks += 1;
            }
            let window: Vec<u32> = self.records[self.window_start..].iter().map(|r| r.seq).collect();
            let flags = self.flags();
            let flag_text: Vec<String> = flags.iter().map(|f| f.text.clone()).collect();
            let event = |outcome: &str, this: &mut Self| {
                this.events.push(SessionEvent::Checkpoint {
                    index,
                    round,
                    trigger: trigger.clone(),
                    window: window.clone(),
                    flags: flag_text.clone(),
                    outcome: outcome.to_string(),
                })
            };
            if flags.is_empty() {
                event("pass", self);
                self.close_window();
                return Ok(());
            }
            if let Some(reason) = self.collapsed() {
                event("escalate", self);
                return Err(Flow::Escalate(reason));
            }
            if corrections >= self.cfg.inner_retry_budget {
                event("escalate", self);
                return Err(Flow::Escalate(format!("inner retry budget of {} exhausted", self.cfg.inner_retry_budget)));
            }
            event("review", self);
            let blocking = flags.iter().any(Flag::blocking);
            let window_refs: Vec<&ActionRecord> = self.records[self.window_start..].iter().collect();
            let graph = prompts::graph_summary(&self.memory, &self.records);
            let prompt = prompts::orchestrator(self.query, self.plan(), &window_refs, graph, &flag_text);
            corrections += 1;
            let (raw, parsed) = match self.call(Role::Orchestrator, &prompt, SchemaId::Directive)? {
                Completion::Malformed { raw, reason } => (json!(raw), Err(format!("malformed directive: {reason}"))),
                Completion::Record(v) => {
                    let parsed = serde_json::from_value::<Directive>(v.clone())
                        .map_err(|e| format!("invalid directive: {e}"))
                        .and_then(|d| self.check_directive(d, blocking));
                    (v, parsed)
                }
            };
            match parsed {
                Err(reason) => {
                    warn!(%reason, "directive rejected");
                    self.events.push(SessionEvent::Directive { checkpoint: index, directive: raw, accepted: false, reason: Some(reason) });
                    self.rejected += 1;
                    if self.rejected >= self.cfg.collapse_after {
                        return Err(Flow::Escalate(format!("{} orchestrator directives rejected", self.rejected)));
                    }
                }
                Ok(directive) => {
                    self.events.push(SessionEvent::Directive { checkpoint: index, directive: raw, accepted: true, reason: None });
                    let acked: Vec<u32> = self.records[self.window_start..].iter().map(|r| r.seq).collect();
                    self.acknowledged.extend(acked);
                    if directive == Directive::Pass {
                        self.close_window();
                        return Ok(());
                    }
                    self.stats.corrections += 1;
                    self.recover(directive, index)?;
                    trigger = "recheck".into();
                }
            }
        }
        unreachable!("the review loop only exits by returning")
    }

    fn close_window(&mut self) {
        self.window_start = self.records.len();
        self.since_last = 0;
    }

    fn check_directive(&self, d: Directive, blocking: bool) -> Result<Directive, String> {
        let executed = |k: u32| self.plan().subtask(k).is_some_and(|s| s.tool != FINALIZE) && self.current.contains_key(&k);
        match &d {
            Directive::Pass if blocking => Err("pass rejected: failing actions remain".into()),
            Directive::Retry { subtask, .. } | Directive::Reparse { subtask, .. } if !executed(*subtask) => {
                Err(format!("unknown or unexecuted subtask {subtask}"))
            }
            Directive::EvictRedo { node, .. } => match self.subtask_of_node(node) {
                Some(_) => Ok(d),
                None => Err(format!("node {node} is unknown or no longer valid")),
            },
            _ => Ok(d),
        }
    }

    fn subtask_of_node(&self, node: &NodeId) -> Option<u32> {
        self.current.iter().find(|(_, &i)| self.records[i].is_ok() && self.records[i].node.as_ref() == Some(node)).map(|(&k, _)| k)
    }

    /// Evicts the artifacts of `node` and its descendants and invalidates
    /// their records.
    fn evict_from(&mut self, node: &NodeId) -> Result<(Vec<Handle>, Vec<u32>), Flow> {
        let evicted = self.pool.evict_descendants(&self.memory, node).map_err(|e| Flow::Fail(format!("eviction: {e}")))?;
        let mut taint = self.memory.descendants(node).map_err(|e| Flow::Fail(format!("eviction: {e}")))?;
        taint.insert(node.clone());
        let mut invalidated = Vec::new();
        for r in self.records.iter_mut().filter(|r| r.is_ok()) {
            if r.node.as_ref().is_some_and(|n| taint.contains(n)) {
                r.status = RecordStatus::Invalidated;
                invalidated.push(r.seq);
            }
        }
        Ok((evicted, invalidated))
    }

    fn recover(&mut self, directive: Directive, checkpoint: u32) -> Result<(), Flow> {
        let (target, reparse, hint, origin) = match &directive {
            Directive::Retry { subtask, hint } => (*subtask, false, hint.clone(), "retry"),
            Directive::Reparse { subtask, hint } => (*subtask, true, hint.clone(), "reparse"),
            Directive::EvictRedo { node, hint } => (self.subtask_of_node(node).expect("checked"), true, hint.clone(), "redo"),
            Directive::Pass => return Ok(()),
        };
        let (mut evicted, mut invalidated) = (Vec::new(), Vec::new());
        if let Some(node) = self.latest(target).filter(|r| r.is_ok()).and_then(|r| r.node.clone()) {
            (evicted, invalidated) = self.evict_from(&node)?;
        }
        let subtasks = self.plan().subtasks.clone();
        let start = self.plan().position(target).expect("checked");
        let mut reexecuted = Vec::new();
        for sub in &subtasks[start..] {
            if sub.tool == FINALIZE {
                continue;
            }
            let Some(latest) = self.latest(sub.id) else { continue };
            if sub.id != target && latest.is_ok() {
                continue;
            }
            let source = if sub.id == target && reparse {
                ParamSource::Parse(Some(hint.as_str()).filter(|h| !h.is_empty()))
            } else {
                ParamSource::Reuse
            };
            let idx = self.execute(sub, source, if sub.id == target { origin } else { "replay" })?;
            reexecuted.push(self.records[idx].seq);
            if !self.records[idx].is_ok() {
                break;
            }
        }
        info!(target, ?evicted, ?reexecuted, "inner-loop recovery");
        self.events.push(SessionEvent::Recovery { checkpoint, evicted, invalidated, reexecuted });
        Ok(())
    }

    fn replan(&mut self, reason: &str) -> Result<(), Flow> {
        let failed: Vec<Value> = self
            .records
            .iter()
            .filter(|r| r.status == RecordStatus::Failed)
            .map(|r| json!({"seq": r.seq, "subtask": r.subtask, "tool": r.tool, "error": r.summary}))
            .collect();
        let feedback = json!({
            "reason": reason,
            "failed": failed,
            "graph": prompts::graph_summary(&self.memory, &self.records),
        });
        let plan = self.make_plan(Some(&feedback))?;
        self.stats.replans += 1;
        let old = self.plan.take().expect("replanning an installed plan");

        let keeps = |s: &Subtask| old.subtask(s.id).is_some_and(|o| o.tool == s.tool && o.goal == s.goal);
        let mut kept: BTreeMap<u32, usize> = BTreeMap::new();
        for s in plan.subtasks.iter().filter(|s| keeps(s)) {
            if let Some(&i) = self.current.get(&s.id).filter(|&&i| self.records[i].is_ok()) {
                kept.insert(s.id, i);
            }
        }
        let dropped: Vec<NodeId> = self
            .current
            .iter()
            .filter(|(k, &i)| !kept.contains_key(k) && self.records[i].is_ok())
            .filter_map(|(_, &i)| self.records[i].node.clone())
            .collect();
        for node in &dropped {
            if self.records.iter().any(|r| r.is_ok() && r.node.as_ref() == Some(node)) {
                self.evict_from(node)?;
            }
        }
        kept.retain(|_, &mut i| self.records[i].is_ok());
        let carried: Vec<u32> = kept.keys().copied().collect();
        self.current = kept;
        self.failures.clear();
        self.rejected = 0;
        info!(revision = plan.revision, ?carried, "replanned");
        self.install_plan(plan, carried);
        Ok(())
    }

    fn finish(mut self, outcome: Result<(), String>) -> SessionResult {
        let (status, failure) = match outcome {
            Ok(()) => (SessionStatus::Solved, None),
            Err(message) => {
                warn!(%message, "session failed");
                self.events.push(SessionEvent::Failure { message: message.clone() });
                (SessionStatus::Failed, Some(message))
            }
        };
        let answer = compose_answer(self.query, &self.records, status, failure.as_deref());
        let valid: BTreeSet<NodeId> = self.records.iter().filter(|r| r.is_ok()).filter_map(|r| r.node.clone()).collect();
        let mut graph = self.memory.subgraph(&valid);
        graph.finalize().expect("the execution graph is acyclic");
        info!(session = %self.opts.session_id, ?status, "session end");
        SessionResult {
            query: self.query.clone(),
            status,
            failure,
            answer,
            plan: self.plan,
            records: self.records,
            memory: self.memory,
            graph,
            pool: self.pool,
            events: self.events,
            stats: self.stats,
            config: self.cfg,
            provider: self.provider.name().to_string(),
            model: self.provider.model().to_string(),
        }
    }
}

fn flow_message(f: Flow) -> String {
    match f {
        Flow::Fail(m) | Flow::Escalate(m) => m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directive_records() {
        let d: Directive = serde_json::from_value(json!({"verdict": "reparse", "subtask": 7, "hint": "nt >= 2000"})).unwrap();
        assert_eq!(d, Directive::Reparse { subtask: 7, hint: "nt >= 2000".into() });
        let d: Directive = serde_json::from_value(json!({"verdict": "evict_redo", "node": "n4"})).unwrap();
        assert_eq!(d, Directive::EvictRedo { node: NodeId::new("n4"), hint: String::new() });
        assert!(serde_json::from_value::<Directive>(json!({"verdict": "pass"})).is_ok());
        assert!(serde_json::from_value::<Directive>(json!({"verdict": "ignore"})).is_err());
        assert!(serde_json::from_value::<Directive>(json!({"verdict": "retry"})).is_err());
        assert!(serde_json::from_value::<Directive>(json!({"verdict": "retry", "subtask": 1, "why": "x"})).is_err());
    }
}
