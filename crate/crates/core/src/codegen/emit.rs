//! Program text assembly.

use super::annotations::{conjunct_text, invariant_conjuncts, AnnotationBlock, BlockKind};
use super::expr::{literal, rust_type, string_literal, translate};
use super::plan::{plan_accesses, AccessPlan, Resolution};
use super::{CodegenOptions, Ctx, IoMode, Phase};
use crate::analysis::AnalysisReport;
use crate::frontend::{StreamId, StreamKind, TypeTag, TypedSpec};
use crate::interpreter::escape_message;

struct Emitter<'a> {
    spec: &'a TypedSpec,
    report: &'a AnalysisReport,
    ctx: &'a Ctx,
    opts: CodegenOptions,
    blocks: &'a [AnnotationBlock],
    /// Access plans per accessor, in expression pre-order.
    plans: Vec<Vec<AccessPlan>>,
    out: String,
}

macro_rules! w {
    ($e:expr) => {{
        $e.out.push('\n');
    }};
    ($e:expr, $($arg:tt)*) => {{
        let line = format!($($arg)*);
        $e.out.push_str(&line);
        $e.out.push('\n');
    }};
}

pub(super) fn program(
    spec: &TypedSpec,
    report: &AnalysisReport,
    ctx: &Ctx,
    opts: CodegenOptions,
    blocks: &[AnnotationBlock],
) -> String {
    let mut plans = vec![Vec::new(); spec.streams.len()];
    for p in plan_accesses(spec, report) {
        plans[p.accessor.0].push(p);
    }
    let mut e = Emitter { spec, report, ctx, opts, blocks, plans, out: String::new() };
    e.prelude();
    e.memory();
    if opts.annotations {
        e.ghost();
    }
    e.eval_functions();
    e.write_layers();
    e.output();
    e.rounds();
    e.run();
    match opts.io_mode {
        IoMode::CsvStdin => e.csv_main(),
        IoMode::EmbeddedFunctions => e.embedded_main(),
    }
    e.out
}

fn default_value(ty: TypeTag) -> &'static str {
    match ty {
        TypeTag::Int32 => "0i32",
        TypeTag::Bool => "false",
    }
}

impl Emitter<'_> {
    fn name(&self, id: StreamId) -> &str {
        &self.ctx.names[id.0]
    }

    fn annotation_lines(&self, kind: BlockKind, anchor: &str) -> Vec<String> {
        self.blocks
            .iter()
            .filter(|b| b.kind == kind && b.anchor == anchor)
            .flat_map(|b| b.lines.iter().cloned())
            .collect()
    }

    fn annotate(&mut self, kind: BlockKind, anchor: &str, indent: &str) {
        for line in self.annotation_lines(kind, anchor) {
            w!(self, "{indent}{line}");
        }
    }

    /// `m, gm, out` or `m, out`, for round-function calls.
    fn state_args(&self, m: &str, gm: &str) -> String {
        if self.opts.annotations {
            format!("{m}, {gm}, out")
        } else {
            format!("{m}, out")
        }
    }

    fn state_params(&self) -> &'static str {
        if self.opts.annotations {
            "m: &mut Memory, gm: &mut GhostMemory, out: &mut Out"
        } else {
            "m: &mut Memory, out: &mut Out"
        }
    }

    fn any_fallible(&self) -> bool {
        self.ctx.fallible.iter().any(|&f| f)
    }

    fn prelude(&mut self) {
        w!(self, "// Generated stream monitor. Single file, standard library only.");
        w!(
            self,
            "#![allow(unused_parens, unused_braces, unused_variables, unused_mut, unused_imports, unused_assignments)]"
        );
        w!(
            self,
            "#![allow(dead_code, unreachable_code, non_snake_case, non_camel_case_types, non_upper_case_globals)]"
        );
        w!(self, "#![allow(clippy::all)]");
        w!(self);
        w!(self, "use std::io::{{BufRead, Write}};");
        w!(self);
        self.out.push_str(PRELUDE);
        if self.any_fallible() {
            self.out.push_str(DIVISION);
        }
        if self.report.preflen > 0 {
            self.out.push_str(DYNAMIC);
        }
        if self.opts.annotations {
            self.out.push_str(GHOST_GET);
        }
        let messages: Vec<String> = self
            .spec
            .triggers()
            .map(|(_, s)| match &s.kind {
                StreamKind::Trigger { message, .. } => {
                    string_literal(&escape_message(message.as_deref().unwrap_or_default()))
                }
                _ => unreachable!(),
            })
            .collect();
        w!(self, "const MESSAGES: [&str; {}] = [{}];", messages.len(), messages.join(", "));
        w!(self);
    }

    fn memory(&mut self) {
        let spec = self.spec;
        let inputs: Vec<StreamId> = spec.inputs().map(|(id, _)| id).collect();
        w!(self, "#[derive(Clone, Copy, Default)]");
        w!(self, "struct Input {{");
        for &id in &inputs {
            w!(self, "    {}: {},", self.name(id), rust_type(spec.stream(id).ty));
        }
        w!(self, "}}");
        w!(self);
        w!(self, "const NIN: usize = {};", inputs.len());
        let names: Vec<String> = inputs.iter().map(|id| string_literal(&spec.stream(*id).name)).collect();
        w!(self, "const INPUT_NAMES: [&str; NIN] = [{}];", names.join(", "));
        w!(self);

        w!(self, "struct Memory {{");
        for id in spec.ids() {
            let ty = rust_type(spec.stream(id).ty);
            w!(self, "    {}: Ring<{ty}, {}>,", self.name(id), self.report.slots(id));
        }
        w!(self, "}}");
        w!(self);
        w!(self, "impl Memory {{");
        w!(self, "    fn new() -> Memory {{");
        w!(self, "        Memory {{");
        for id in spec.ids() {
            w!(self, "            {}: Ring::new({}),", self.name(id), default_value(spec.stream(id).ty));
        }
        w!(self, "        }}");
        w!(self, "    }}");
        for id in spec.ids() {
            let n = self.name(id).to_string();
            w!(self);
            self.annotate(BlockKind::GetterContract, &format!("get_{n}"), "    ");
            w!(self, "    #[inline(always)]");
            w!(self, "    fn get_{n}(&self, index: usize) -> {} {{", rust_type(spec.stream(id).ty));
            w!(self, "        self.{n}.get(index)");
            w!(self, "    }}");
        }
        w!(self, "}}");
        w!(self);
        w!(self, "#[inline(always)]");
        w!(self, "fn add_input(m: &mut Memory, inp: &Input) {{");
        for &id in &inputs {
            let n = self.name(id);
            w!(self, "    m.{n}.push(inp.{n});");
        }
        w!(self, "}}");
        w!(self);
    }

    fn ghost(&mut self) {
        self.annotate(BlockKind::GhostMemory, "GhostMemory", "");
        w!(self);
        w!(self, "impl GhostMemory {{");
        w!(self, "    fn new() -> GhostMemory {{");
        w!(self, "        GhostMemory {{");
        for id in self.spec.ids() {
            w!(self, "            {}: Vec::new(),", self.name(id));
        }
        w!(self, "        }}");
        w!(self, "    }}");
        w!(self);
        w!(self, "    fn add_input(&mut self, inp: &Input) {{");
        for (id, _) in self.spec.inputs() {
            let n = self.name(id);
            w!(self, "        self.{n}.push(inp.{n});");
        }
        w!(self, "    }}");
        w!(self, "}}");
        w!(self);
        for (s, _) in self.spec.evaluated() {
            let anchor = format!("ghost_{}", self.name(s));
            self.annotate(BlockKind::GhostFunction, &anchor, "");
            w!(self);
        }
        w!(self, "fn check_invariant(m: &Memory, gm: &GhostMemory, iter: usize) {{");
        for c in invariant_conjuncts(self.spec, self.report) {
            let n = self.name(c.stream);
            let cond = format!("m.get_{n}({}) == gm.{n}[iter - {}]", c.index, c.lag);
            match c.guard {
                Some(g) => w!(self, "    if iter >= {g} {{ assert!({cond}, {:?}); }}", conjunct_text(self.ctx, &c)),
                None => w!(self, "    assert!({cond}, {:?});", conjunct_text(self.ctx, &c)),
            }
        }
        w!(self, "}}");
        w!(self);
    }

    fn access_code(&self, s: StreamId, phase: Phase, n: usize) -> String {
        let plan = &self.plans[s.0][n];
        let target = self.name(plan.accessed);
        let read = |i: u32| format!("m.get_{target}({i})");
        let default = || literal(plan.default.expect("defaults are only used by offset accesses"));
        let resolution = match phase {
            Phase::Loop => Resolution::Read(plan.buffer_index),
            Phase::Prefix(t) => plan.prefix[t as usize],
            Phase::Postfix(j) => plan.postfix[j as usize - 1],
            Phase::Dynamic => {
                let sh2 = self.report.shift(plan.accessed);
                let unc = u32::from(!plan.committed_this_round);
                let idx = format!("dyn_index(t, n, {sh2}, {unc}, {})", plan.distance);
                return match plan.default {
                    Some(d) => format!("(match {idx} {{ Some(i) => m.get_{target}(i), None => {} }})", literal(d)),
                    None => format!("m.get_{target}({idx}.unwrap())"),
                };
            }
        };
        match resolution {
            Resolution::Read(i) => read(i),
            Resolution::Default => default(),
            Resolution::Skipped => unreachable!("accessor not evaluated in this phase"),
        }
    }

    fn eval_functions(&mut self) {
        for (s, stream) in self.spec.evaluated() {
            let expr = stream.expr.as_ref().unwrap();
            let ty = rust_type(stream.ty);
            for phase in self.ctx.phases_of(self.report, s) {
                let fname = self.ctx.eval_fn(phase, s);
                let body = translate(expr, &mut |n, _| self.access_code(s, phase, n));
                let params = if phase == Phase::Dynamic { "m: &Memory, t: i64, n: i64" } else { "m: &Memory" };
                self.annotate(BlockKind::Purity, &fname, "");
                w!(self, "#[inline(always)]");
                if self.ctx.fallible[s.0] {
                    w!(self, "fn {fname}({params}) -> Result<{ty}, Fault> {{");
                    w!(self, "    Ok({body})");
                } else {
                    w!(self, "fn {fname}({params}) -> {ty} {{");
                    w!(self, "    {body}");
                }
                w!(self, "}}");
                w!(self);
            }
        }
    }

    fn write_layers(&mut self) {
        for (i, layer) in self.report.layers.schedule().iter().enumerate() {
            let params: Vec<String> =
                layer.iter().map(|id| format!("{}: {}", self.name(*id), rust_type(self.spec.stream(*id).ty))).collect();
            w!(self, "#[inline(always)]");
            w!(self, "fn write_layer_{}(m: &mut Memory, {}) {{", i + 1, params.join(", "));
            for id in layer {
                let n = self.name(*id);
                w!(self, "    m.{n}.push({n});");
            }
            w!(self, "}}");
            w!(self);
        }
    }

    fn output(&mut self) {
        let dump = self.opts.emit_streams;
        w!(self, "struct Out {{");
        w!(self, "    w: std::io::BufWriter<std::io::StdoutLock<'static>>,");
        w!(self, "    print: bool,");
        w!(self, "    firings: u64,");
        w!(self, "    checksum: u64,");
        if dump {
            w!(self, "    dump: Option<Dump>,");
        }
        w!(self, "}}");
        w!(self);
        w!(self, "impl Out {{");
        w!(self, "    #[inline(always)]");
        w!(self, "    fn fire(&mut self, pos: usize, idx: usize) {{");
        w!(self, "        self.firings += 1;");
        w!(self, "        self.checksum = self.checksum.wrapping_add(mix(((pos as u64) << 16) ^ idx as u64));");
        w!(self, "        if self.print {{");
        w!(self, "            let _ = writeln!(self.w, \"{{}},{{}},{{}}\", pos, idx, MESSAGES[idx]);");
        w!(self, "        }}");
        w!(self, "    }}");
        w!(self);
        w!(self, "    fn note_input(&mut self) {{");
        if dump {
            w!(self, "        if let Some(d) = self.dump.as_mut() {{");
            w!(self, "            d.inputs += 1;");
            w!(self, "        }}");
        }
        w!(self, "    }}");
        w!(self);
        w!(self, "    fn flush_dump(&mut self) {{");
        if dump {
            w!(self, "        if let Some(d) = self.dump.as_mut() {{");
            w!(self, "            d.flush();");
            w!(self, "        }}");
        }
        w!(self, "    }}");
        w!(self);
        w!(self, "    fn finish(&mut self) {{");
        w!(self, "        let _ = self.w.flush();");
        if dump {
            w!(self, "        if let Some(d) = self.dump.take() {{");
            w!(self, "            d.finish();");
            w!(self, "        }}");
        }
        w!(self, "    }}");
        w!(self, "}}");
        w!(self);
        if dump {
            self.dump();
        }
    }

    fn dump(&mut self) {
        let spec = self.spec;
        let cap = self.report.postlen + 1;
        let evaluated: Vec<StreamId> = spec.evaluated().map(|(id, _)| id).collect();
        self.out.push_str(DUMP_LINE);
        w!(self, "struct DumpLines {{");
        for &id in &evaluated {
            w!(self, "    {}: DumpLine<{}, {cap}>,", self.name(id), rust_type(spec.stream(id).ty));
        }
        w!(self, "}}");
        w!(self);
        w!(self, "struct Dump {{");
        w!(self, "    file: std::io::BufWriter<std::fs::File>,");
        w!(self, "    firings: std::io::BufWriter<std::fs::File>,");
        w!(self, "    firings_path: String,");
        w!(self, "    next: usize,");
        w!(self, "    inputs: usize,");
        w!(self, "    lines: DumpLines,");
        w!(self, "}}");
        w!(self);
        let header: Vec<&str> = evaluated.iter().map(|id| spec.stream(*id).name.as_str()).collect();
        w!(self, "impl Dump {{");
        w!(self, "    fn create(path: &str) -> std::io::Result<Dump> {{");
        w!(self, "        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);");
        w!(self, "        writeln!(file, \"{{}}\", {})?;", string_literal(&header.join(",")));
        w!(self, "        let firings_path = format!(\"{{}}.firings.tmp\", path);");
        w!(self, "        let firings = std::io::BufWriter::new(std::fs::File::create(&firings_path)?);");
        w!(self, "        Ok(Dump {{");
        w!(self, "            file,");
        w!(self, "            firings,");
        w!(self, "            firings_path,");
        w!(self, "            next: 0,");
        w!(self, "            inputs: 0,");
        w!(self, "            lines: DumpLines {{");
        for &id in &evaluated {
            w!(self, "                {}: DumpLine::new({}),", self.name(id), default_value(spec.stream(id).ty));
        }
        w!(self, "            }},");
        w!(self, "        }})");
        w!(self, "    }}");
        w!(self);
        w!(self, "    /// Writes every row that all streams have committed.");
        w!(self, "    fn flush(&mut self) {{");
        w!(
            self,
            "        let ready = self.inputs{};",
            evaluated.iter().map(|id| format!(".min(self.lines.{}.count)", self.name(*id))).collect::<String>()
        );
        w!(self, "        while self.next < ready {{");
        w!(self, "            let p = self.next;");
        let fmt = vec!["{}"; evaluated.len()].join(",");
        let args: String = evaluated.iter().map(|id| format!(", self.lines.{}.at(p)", self.name(*id))).collect();
        w!(self, "            let _ = writeln!(self.file, \"{fmt}\"{args});");
        for (id, s) in spec.triggers() {
            let StreamKind::Trigger { index, .. } = s.kind else { unreachable!() };
            w!(self, "            if self.lines.{}.at(p) {{", self.name(id));
            w!(self, "                let _ = writeln!(self.firings, \"# trigger,{{}},{index},{{}}\", p, MESSAGES[{index}]);");
            w!(self, "            }}");
        }
        w!(self, "            self.next += 1;");
        w!(self, "        }}");
        w!(self, "    }}");
        w!(self);
        w!(self, "    /// Appends the firing lines after the last row.");
        w!(self, "    fn finish(mut self) {{");
        w!(self, "        self.flush();");
        w!(self, "        let Dump {{ mut file, firings, firings_path, .. }} = self;");
        w!(self, "        let _ = firings.into_inner().map(|f| f.sync_all());");
        w!(self, "        if let Ok(mut f) = std::fs::File::open(&firings_path) {{");
        w!(self, "            let _ = std::io::copy(&mut f, &mut file);");
        w!(self, "        }}");
        w!(self, "        let _ = file.flush();");
        w!(self, "        let _ = std::fs::remove_file(&firings_path);");
        w!(self, "    }}");
        w!(self, "}}");
        w!(self);
    }

    fn trigger_index(&self, s: StreamId) -> Option<usize> {
        match self.spec.stream(s).kind {
            StreamKind::Trigger { index, .. } => Some(index),
            _ => None,
        }
    }

    /// Statement binding `v_s` from an evaluation result `call`, leaving the
    /// round with a fault at `pos` if the evaluation failed.
    fn bind(&self, s: StreamId, call: &str, pos: &str) -> String {
        let n = self.name(s);
        if self.ctx.fallible[s.0] {
            let name = string_literal(&self.spec.stream(s).name);
            format!(
                "let v_{n} = match {call} {{ Ok(v) => v, Err(_) => return Err(Failure {{ stream: {name}, position: {pos} }}) }};"
            )
        } else {
            format!("let v_{n} = {call};")
        }
    }

    /// Effects after a value is committed: ghost write, dump line, firing.
    fn after_commit(&mut self, s: StreamId, pos: &str, indent: &str) {
        let n = self.name(s).to_string();
        if self.opts.annotations {
            w!(self, "{indent}gm.{n}.push(v_{n});");
        }
        if self.opts.emit_streams {
            w!(self, "{indent}if let Some(d) = out.dump.as_mut() {{ d.lines.{n}.push(v_{n}); }}");
        }
        if let Some(idx) = self.trigger_index(s) {
            w!(self, "{indent}if v_{n} {{ out.fire({pos}, {idx}); }}");
        }
    }

    /// Body of a statically scheduled round.
    fn round_body(&mut self, phase: Phase) {
        let schedule = self.report.layers.schedule();
        for (li, layer) in schedule.iter().enumerate() {
            let members: Vec<StreamId> =
                layer.iter().copied().filter(|&s| self.ctx.phases_of(self.report, s).contains(&phase)).collect();
            if members.is_empty() {
                continue;
            }
            w!(self, "    // layer {}", li + 1);
            let pos = |e: &Self, s: StreamId| format!("iter - {}", e.report.shift(s));
            if self.opts.parallel && members.len() >= 2 {
                let rs: Vec<String> = members.iter().map(|s| format!("r_{}", self.name(*s))).collect();
                w!(self, "    let ({}) = {{", rs.join(", "));
                w!(self, "        let mr: &Memory = &*m;");
                w!(self, "        std::thread::scope(|sc| {{");
                for &s in &members {
                    let n = self.name(s);
                    w!(self, "            let h_{n} = sc.spawn(move || {}(mr));", self.ctx.eval_fn(phase, s));
                }
                let joins: Vec<String> =
                    members.iter().map(|s| format!("h_{}.join().unwrap()", self.name(*s))).collect();
                w!(self, "            ({})", joins.join(", "));
                w!(self, "        }})");
                w!(self, "    }};");
                for &s in &members {
                    let line = self.bind(s, &format!("r_{}", self.name(s)), &pos(self, s));
                    w!(self, "    {line}");
                }
            } else {
                for &s in &members {
                    let line = self.bind(s, &format!("{}(m)", self.ctx.eval_fn(phase, s)), &pos(self, s));
                    w!(self, "    {line}");
                }
            }
            for &s in &members {
                let anchor = self.ctx.eval_fn(phase, s);
                self.annotate(BlockKind::InlineAssertion, &anchor, "    ");
            }
            if members.len() == layer.len() {
                let vs: Vec<String> = members.iter().map(|s| format!("v_{}", self.name(*s))).collect();
                w!(self, "    write_layer_{}(m, {});", li + 1, vs.join(", "));
            } else {
                for &s in &members {
                    let n = self.name(s);
                    w!(self, "    m.{n}.push(v_{n});");
                }
            }
            for &s in &members {
                let p = pos(self, s);
                self.after_commit(s, &p, "    ");
            }
        }
        if self.opts.emit_streams {
            w!(self, "    out.flush_dump();");
        }
        w!(self, "    Ok(())");
    }

    fn rounds(&mut self) {
        let params = self.state_params();
        for t in 0..self.report.preflen {
            w!(self, "fn round_pre{t}({params}, iter: usize) -> Result<(), Failure> {{");
            self.round_body(Phase::Prefix(t));
            w!(self, "}}");
            w!(self);
        }
        w!(self, "fn round_loop({params}, iter: usize) -> Result<(), Failure> {{");
        self.round_body(Phase::Loop);
        w!(self, "}}");
        w!(self);
        for j in 1..=self.report.postlen {
            w!(self, "fn round_post{j}({params}, iter: usize) -> Result<(), Failure> {{");
            self.round_body(Phase::Postfix(j));
            w!(self, "}}");
            w!(self);
        }
        if self.report.preflen > 0 {
            self.epilogue();
        }
    }

    /// Completes a trace that ended inside the prefix, with bounds checked at
    /// run time.
    fn epilogue(&mut self) {
        let params = self.state_params();
        w!(self, "/// Finishes a trace of `events` positions that ended before the monitor loop.");
        w!(self, "fn epilogue({params}, events: usize) -> Result<(), Failure> {{");
        w!(self, "    let n = events as i64;");
        w!(self, "    for t in n..n + {} {{", self.report.postlen);
        w!(self, "        let iter = t as usize;");
        for (li, layer) in self.report.layers.schedule().iter().enumerate() {
            w!(self, "        // layer {}", li + 1);
            for &s in layer {
                let n = self.name(s).to_string();
                let call = format!("{}(m, t, n)", self.ctx.eval_fn(Phase::Dynamic, s));
                let bind = self.bind(s, &call, &format!("p_{n} as usize"));
                w!(self, "        let p_{n} = t - {};", self.report.shift(s));
                w!(self, "        let v_{n} = if p_{n} >= 0 && p_{n} < n {{");
                w!(self, "            {bind}");
                let anchor = self.ctx.eval_fn(Phase::Dynamic, s);
                self.annotate(BlockKind::InlineAssertion, &anchor, "            ");
                w!(self, "            Some(v_{n})");
                w!(self, "        }} else {{");
                w!(self, "            None");
                w!(self, "        }};");
            }
            for &s in layer {
                let n = self.name(s).to_string();
                w!(self, "        if let Some(v_{n}) = v_{n} {{");
                w!(self, "            m.{n}.push(v_{n});");
                self.after_commit(s, &format!("p_{n} as usize"), "            ");
                w!(self, "        }}");
            }
        }
        if self.opts.emit_streams {
            w!(self, "        out.flush_dump();");
        }
        w!(self, "    }}");
        w!(self, "    Ok(())");
        w!(self, "}}");
        w!(self);
    }

    fn receive(&mut self) {
        if self.opts.annotations {
            w!(self, "fn receive(m: &mut Memory, gm: &mut GhostMemory, out: &mut Out, inp: &Input) {{");
            w!(self, "    add_input(m, inp);");
            w!(self, "    gm.add_input(inp);");
        } else {
            w!(self, "fn receive(m: &mut Memory, out: &mut Out, inp: &Input) {{");
            w!(self, "    add_input(m, inp);");
        }
        w!(self, "    out.note_input();");
        w!(self, "}}");
        w!(self);
    }

    fn run(&mut self) {
        self.receive();
        let preflen = self.report.preflen;
        let params = self.state_params();
        let args = self.state_args("m", "gm");
        if preflen > 0 {
            w!(self, "/// The execution prefix. Returns `false` if the input ends early, with");
            w!(self, "/// `iter` holding the number of events received.");
            w!(self, "fn prefix<S: Source>({params}, src: &mut S, iter: &mut usize) -> Result<bool, Failure> {{");
            for t in 0..preflen {
                w!(self, "    // prefix iteration {t}");
                w!(self, "    match src.next() {{");
                w!(self, "        Some(inp) => receive({args}, &inp),");
                w!(self, "        None => return Ok(false),");
                w!(self, "    }}");
                w!(self, "    round_pre{t}({args}, {t})?;");
                w!(self, "    *iter = {};", t + 1);
            }
            w!(self, "    Ok(true)");
            w!(self, "}}");
            w!(self);
        }
        let margs = self.state_args("&mut m", "&mut gm");
        w!(self, "fn run<S: Source>(src: &mut S, out: &mut Out) -> Result<(), Failure> {{");
        w!(self, "    let mut m = Memory::new();");
        if self.opts.annotations {
            w!(self, "    let mut gm = GhostMemory::new();");
        }
        w!(self, "    let mut iter: usize = 0;");
        if preflen > 0 {
            w!(self, "    if !prefix({margs}, src, &mut iter)? {{");
            w!(self, "        return epilogue({margs}, iter);");
            w!(self, "    }}");
        }
        self.annotate(BlockKind::LoopEntry, "monitor loop", "    ");
        if self.opts.annotations {
            for id in self.spec.ids() {
                let anchor = self.name(id).to_string();
                self.annotate(BlockKind::LoopInvariant, &anchor, "    ");
            }
        }
        w!(self, "    loop {{");
        if self.opts.annotations {
            w!(self, "        check_invariant(&m, &gm, iter);");
        }
        w!(self, "        let Some(inp) = src.next() else {{ break }};");
        w!(self, "        receive({margs}, &inp);");
        w!(self, "        round_loop({margs}, iter)?;");
        w!(self, "        iter += 1;");
        w!(self, "    }}");
        w!(self, "    let n = iter;");
        for j in 1..=self.report.postlen {
            w!(self, "    round_post{j}({margs}, n - 1 + {j})?;");
        }
        w!(self, "    Ok(())");
        w!(self, "}}");
        w!(self);
    }

    fn input_parsers(&mut self) {
        w!(self, "fn parse_row(text: &str, map: &[usize; NIN]) -> Result<Input, String> {{");
        w!(self, "    let mut inp = Input::default();");
        w!(self, "    let mut cols = 0;");
        w!(self, "    for (c, cell) in text.split(',').enumerate() {{");
        w!(self, "        if c >= NIN {{");
        w!(self, "            return Err(format!(\"expected {{}} cells, found more\", NIN));");
        w!(self, "        }}");
        w!(self, "        let cell = cell.trim();");
        w!(self, "        match map[c] {{");
        for (i, (id, s)) in self.spec.inputs().enumerate() {
            let parse = match s.ty {
                TypeTag::Int32 => "parse_int(cell)?",
                TypeTag::Bool => "parse_bool(cell)?",
            };
            w!(self, "            {i} => inp.{} = {parse},", self.name(id));
        }
        w!(self, "            _ => unreachable!(),");
        w!(self, "        }}");
        w!(self, "        cols += 1;");
        w!(self, "    }}");
        w!(self, "    if cols != NIN {{");
        w!(self, "        return Err(format!(\"expected {{}} cells, found {{}}\", NIN, cols));");
        w!(self, "    }}");
        w!(self, "    Ok(inp)");
        w!(self, "}}");
        w!(self);
    }

    fn csv_main(&mut self) {
        self.out.push_str(CSV_SOURCE);
        self.input_parsers();
        let streams = self.opts.emit_streams;
        w!(self, "fn main() {{");
        w!(self, "    install_panic_hook();");
        w!(self, "    let mut streams_out: Option<String> = None;");
        w!(self, "    let mut args = std::env::args().skip(1);");
        w!(self, "    while let Some(a) = args.next() {{");
        w!(self, "        match a.as_str() {{");
        if streams {
            w!(self, "            \"--streams-out\" => streams_out = args.next(),");
        }
        w!(self, "            _ => {{");
        w!(
            self,
            "                eprintln!(\"usage: monitor{} < trace.csv\");",
            if streams { " [--streams-out <path>]" } else { "" }
        );
        w!(self, "                std::process::exit(3);");
        w!(self, "            }}");
        w!(self, "        }}");
        w!(self, "    }}");
        w!(self, "    let mut out = Out {{");
        w!(self, "        w: std::io::BufWriter::new(std::io::stdout().lock()),");
        w!(self, "        print: true,");
        w!(self, "        firings: 0,");
        w!(self, "        checksum: 0,");
        if streams {
            w!(self, "        dump: None,");
        }
        w!(self, "    }};");
        if streams {
            w!(self, "    if let Some(path) = streams_out {{");
            w!(self, "        match Dump::create(&path) {{");
            w!(self, "            Ok(d) => out.dump = Some(d),");
            w!(self, "            Err(e) => {{");
            w!(self, "                eprintln!(\"error: cannot write {{}}: {{}}\", path, e);");
            w!(self, "                std::process::exit(3);");
            w!(self, "            }}");
            w!(self, "        }}");
            w!(self, "    }}");
        }
        w!(self, "    let mut src = CsvSource::new();");
        w!(self, "    let result = run(&mut src, &mut out);");
        w!(self, "    out.finish();");
        w!(self, "    exit_with(result);");
        w!(self, "}}");
    }

    fn embedded_main(&mut self) {
        self.out.push_str(RNG_SOURCE);
        w!(self, "impl Source for RngSource {{");
        w!(self, "    #[inline(always)]");
        w!(self, "    fn next(&mut self) -> Option<Input> {{");
        w!(self, "        if self.remaining == 0 {{");
        w!(self, "            return None;");
        w!(self, "        }}");
        w!(self, "        self.remaining -= 1;");
        w!(self, "        let mut inp = Input::default();");
        for (id, s) in self.spec.inputs() {
            let draw = match s.ty {
                TypeTag::Int32 => "(self.lo + (self.draw() % self.span) as i64) as i32",
                TypeTag::Bool => "(self.draw() >> 63) == 1",
            };
            w!(self, "        inp.{} = {draw};", self.name(id));
        }
        w!(self, "        Some(inp)");
        w!(self, "    }}");
        w!(self, "}}");
        w!(self);
        let streams = self.opts.emit_streams;
        w!(self, "fn main() {{");
        w!(self, "    install_panic_hook();");
        w!(self, "    let (mut events, mut seed, mut lo, mut hi) = (0u64, 1u64, 0i64, 1000i64);");
        w!(self, "    let mut args = std::env::args().skip(1);");
        w!(self, "    while let Some(a) = args.next() {{");
        w!(self, "        let v = args.next().and_then(|v| v.parse::<i64>().ok());");
        w!(self, "        match (a.as_str(), v) {{");
        w!(self, "            (\"--events\", Some(v)) if v >= 0 => events = v as u64,");
        w!(self, "            (\"--seed\", Some(v)) => seed = v as u64,");
        w!(self, "            (\"--lo\", Some(v)) => lo = v,");
        w!(self, "            (\"--hi\", Some(v)) => hi = v,");
        w!(self, "            _ => {{");
        w!(self, "                eprintln!(\"usage: monitor --events N [--seed S] [--lo L] [--hi H]\");");
        w!(self, "                std::process::exit(3);");
        w!(self, "            }}");
        w!(self, "        }}");
        w!(self, "    }}");
        w!(self, "    let mut out = Out {{");
        w!(self, "        w: std::io::BufWriter::new(std::io::stdout().lock()),");
        w!(self, "        print: false,");
        w!(self, "        firings: 0,");
        w!(self, "        checksum: 0,");
        if streams {
            w!(self, "        dump: None,");
        }
        w!(self, "    }};");
        w!(self, "    let mut src = RngSource::new(seed, events, lo, hi);");
        w!(self, "    let start = std::time::Instant::now();");
        w!(self, "    let result = run(&mut src, &mut out);");
        w!(self, "    let elapsed = start.elapsed().as_nanos();");
        w!(self, "    if result.is_ok() {{");
        w!(self, "        let _ = writeln!(out.w, \"events={{}} firings={{}} checksum={{}} elapsed_ns={{}}\", events, out.firings, out.checksum, elapsed);");
        w!(self, "    }}");
        w!(self, "    out.finish();");
        w!(self, "    exit_with(result);");
        w!(self, "}}");
    }
}

const PRELUDE: &str = r#"/// Fixed-capacity ring buffer; index 0 is the newest value.
#[derive(Clone, Copy)]
struct Ring<T: Copy, const N: usize> {
    buf: [T; N],
    head: usize,
}

impl<T: Copy, const N: usize> Ring<T, N> {
    fn new(init: T) -> Self {
        Ring { buf: [init; N], head: 0 }
    }

    #[inline(always)]
    fn get(&self, index: usize) -> T {
        let mut k = self.head + N - index;
        if k >= N {
            k -= N;
        }
        self.buf[k]
    }

    #[inline(always)]
    fn push(&mut self, v: T) {
        self.head += 1;
        if self.head == N {
            self.head = 0;
        }
        self.buf[self.head] = v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Fault;

struct Failure {
    stream: &'static str,
    position: usize,
}

trait Source {
    fn next(&mut self) -> Option<Input>;
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn install_panic_hook() {
    std::panic::set_hook(Box::new(|info| {
        eprintln!("internal error: {}", info);
        std::process::exit(3);
    }));
}

fn exit_with(result: Result<(), Failure>) {
    if let Err(f) = result {
        eprintln!("error: division by zero in stream `{}` at position {}", f.stream, f.position);
        std::process::exit(2);
    }
}

"#;

const DIVISION: &str = r#"#[inline(always)]
fn div(a: i32, b: i32) -> Result<i32, Fault> {
    if b == 0 {
        Err(Fault)
    } else {
        Ok(a.wrapping_div(b))
    }
}

#[inline(always)]
fn rem(a: i32, b: i32) -> Result<i32, Fault> {
    if b == 0 {
        Err(Fault)
    } else {
        Ok(a.wrapping_rem(b))
    }
}

"#;

const DYNAMIC: &str = r#"/// Buffer index of position `t - sh - d` in a trace of `n` positions, or
/// `None` outside the trace. `unc` is 1 if the stream has not yet committed
/// in round `t`.
#[inline(always)]
fn dyn_index(t: i64, n: i64, sh: i64, unc: i64, d: i64) -> Option<usize> {
    let q = t - sh - d;
    if q < 0 || q > n - 1 {
        return None;
    }
    let newest = (t - sh - unc).min(n - 1);
    Some((newest - q) as usize)
}

"#;

const GHOST_GET: &str = r#"fn gget<T: Copy>(v: &[T], q: i64, default: T) -> T {
    if q < 0 || q >= v.len() as i64 {
        default
    } else {
        v[q as usize]
    }
}

"#;

const DUMP_LINE: &str = r#"/// The last `N` values of a stream, addressed by absolute position.
struct DumpLine<T: Copy, const N: usize> {
    buf: [T; N],
    count: usize,
}

impl<T: Copy, const N: usize> DumpLine<T, N> {
    fn new(init: T) -> Self {
        DumpLine { buf: [init; N], count: 0 }
    }

    #[inline(always)]
    fn push(&mut self, v: T) {
        self.buf[self.count % N] = v;
        self.count += 1;
    }

    #[inline(always)]
    fn at(&self, p: usize) -> T {
        self.buf[p % N]
    }
}

"#;

const CSV_SOURCE: &str = r#"/// Reads trace rows from standard input. Malformed input ends the trace.
struct CsvSource {
    r: std::io::StdinLock<'static>,
    line: String,
    map: [usize; NIN],
    line_no: usize,
    ok: bool,
}

impl CsvSource {
    fn new() -> CsvSource {
        let mut s = CsvSource { r: std::io::stdin().lock(), line: String::new(), map: [0; NIN], line_no: 0, ok: true };
        s.header();
        s
    }

    fn read(&mut self) -> bool {
        self.line.clear();
        match self.r.read_line(&mut self.line) {
            Ok(0) => false,
            Ok(_) => {
                self.line_no += 1;
                true
            }
            Err(e) => {
                eprintln!("input error: {}", e);
                false
            }
        }
    }

    fn header(&mut self) {
        if !self.read() {
            if NIN > 0 {
                eprintln!("input error: missing header row");
            }
            self.ok = false;
            return;
        }
        let text = self.line.trim_end_matches('\n').trim_end_matches('\r');
        if NIN == 0 {
            if !text.trim().is_empty() {
                eprintln!("input error: line 1: unexpected columns");
                self.ok = false;
            }
            return;
        }
        let mut seen = [false; NIN];
        let mut cols = 0;
        for (c, name) in text.split(',').enumerate() {
            let name = name.trim();
            match INPUT_NAMES.iter().position(|n| *n == name) {
                Some(i) if c < NIN && !seen[i] => {
                    seen[i] = true;
                    self.map[c] = i;
                    cols += 1;
                }
                _ => {
                    eprintln!("input error: line 1: unexpected column `{}`", name);
                    self.ok = false;
                    return;
                }
            }
        }
        if cols != NIN {
            eprintln!("input error: line 1: missing columns");
            self.ok = false;
        }
    }
}

impl Source for CsvSource {
    fn next(&mut self) -> Option<Input> {
        loop {
            if !self.ok || !self.read() {
                self.ok = false;
                return None;
            }
            let text = self.line.trim_end_matches('\n').trim_end_matches('\r');
            if NIN == 0 {
                return Some(Input::default());
            }
            if text.trim().is_empty() {
                continue;
            }
            match parse_row(text, &self.map) {
                Ok(inp) => return Some(inp),
                Err(msg) => {
                    eprintln!("input error: line {}: {}", self.line_no, msg);
                    self.ok = false;
                    return None;
                }
            }
        }
    }
}

fn parse_int(cell: &str) -> Result<i32, String> {
    cell.parse::<i32>().map_err(|_| format!("invalid Int32 value `{}`", cell))
}

fn parse_bool(cell: &str) -> Result<bool, String> {
    match cell {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(format!("invalid Bool value `{}`", cell)),
    }
}

"#;

const RNG_SOURCE: &str = r#"/// Seeded xorshift64* input generator.
struct RngSource {
    x: u64,
    remaining: u64,
    lo: i64,
    span: u64,
}

impl RngSource {
    fn new(seed: u64, events: u64, lo: i64, hi: i64) -> RngSource {
        let mut x = mix(seed.wrapping_add(0x9E3779B97F4A7C15));
        if x == 0 {
            x = 0x9E3779B97F4A7C15;
        }
        RngSource { x, remaining: events, lo, span: (hi - lo + 1) as u64 }
    }

    #[inline(always)]
    fn draw(&mut self) -> u64 {
        let mut x = self.x;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.x = x;
        x.wrapping_mul(0x2545F4914F6CDD1D)
    }
}

"#;
