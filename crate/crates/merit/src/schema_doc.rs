//! Generates the schema reference for benchmark definition files from the
//! type definitions' field tables. `merit schema` prints it; the committed
//! `docs/schema.md` is kept in sync by a test.

type FieldRow = (&'static str, &'static str, &'static str);

const TYPES: &[(&str, &str, &[FieldRow])] = &[
    (
        "BenchmarkSpec (document root)",
        "One benchmark definition. A definitions directory holds one `*.toml` per benchmark.",
        &[
            ("name", "string", "unique identifier; used as a path component"),
            ("description", "string", "optional free text"),
            ("reference_nodes", "integer", "node count anchoring reference runtimes (default 8)"),
            ("[[parameter_set]]", "table array", "parameter sets, see ParameterSet"),
            ("[[step]]", "table array", "execution steps, see Step"),
            ("[[variant]]", "table array", "memory variants, see VariantDef"),
            ("[fom]", "table", "figure-of-merit rule, see FomSpec"),
            ("[[verification]]", "table array", "verification rules, see VerificationRule"),
        ],
    ),
    (
        "ParameterSet",
        "A named group of parameters, optionally gated by tags. A set is active when its \
         `active_tags` is empty or intersects the requested tags; of several active sets with \
         the same name the last declared wins, and a parameter defined by several active sets \
         takes its last definition.",
        &[
            ("name", "string", "set identifier (repeats allowed for tag overrides)"),
            ("active_tags", "string array", "tags activating this set; empty = always active"),
            (
                "parameters.<name>",
                "array or string",
                "an array is a literal value list (expansion multiplies lists out); a bare \
                 string is a template evaluated after substituting other parameters",
            ),
        ],
    ),
    (
        "Step",
        "One node of the execution DAG. `${param}` placeholders in `command` are rendered per \
         workpackage. Dependencies must be declared steps and stay acyclic.",
        &[
            ("name", "string", "step identifier; used as a directory name"),
            ("kind", "string", "one of `compile`, `execute`, `postprocess`, `verify`"),
            ("command", "string", "command template handed to the backend"),
            ("depends_on", "string array", "names of steps this one needs"),
            ("iterations", "integer", "times the command runs (default 1)"),
        ],
    ),
    (
        "FomSpec",
        "How the figure of merit is extracted and normalized to seconds. The last pattern match \
         in the concatenated step output wins.",
        &[
            ("pattern", "string", "regular expression with exactly one capture group"),
            ("unit", "string", "unit of the raw figure, e.g. `s` or `B/s`"),
            ("kind", "string", "`time` (already seconds) or `rate` (converted)"),
            (
                "work_units",
                "float",
                "required iff kind = `rate`: amount of work whose completion defines the \
                 time-metric; normalized value is `work_units / rate`",
            ),
            ("lower_is_better", "bool", "direction after normalization; must be true"),
        ],
    ),
    (
        "VerificationRule",
        "Declarative result checks applied after the steps. `scalar_tolerance` passes iff \
         |observed - reference| <= rel_tolerance * |reference| (absolute fallback when the \
         reference is 0); `exact_match` requires exact equality; `key_presence` requires the \
         target text in the output.",
        &[
            ("kind", "string", "`scalar_tolerance`, `exact_match`, or `key_presence`"),
            ("target", "string", "metric name (`fom`) or required output text"),
            (
                "reference",
                "float or string",
                "inline value, or path of a reference file (one value per line, `#` comments); \
                 required for scalar_tolerance and exact_match",
            ),
            ("rel_tolerance", "float", "non-negative; scalar_tolerance only"),
        ],
    ),
    (
        "VariantDef",
        "Memory variants. Canonical names carry fixed fractions of reference per-device \
         memory: tiny 25%, small 50%, medium 75%, large 100%. Free tags carry no fraction.",
        &[
            ("name", "string", "`tiny`/`small`/`medium`/`large` or a free tag"),
            ("memory_fraction", "float", "optional; must equal the canonical value"),
            ("tag_overrides", "string array", "tags this variant activates"),
        ],
    ),
    (
        "PlatformProfile (platforms.toml)",
        "Where rendered commands run. `platforms.toml` holds `[[platform]]` entries; built-in \
         profiles `local` and `simulated` exist without it and can be overridden by name.",
        &[
            ("name", "string", "profile identifier, selected with --platform"),
            ("backend", "string", "`local`, `simulated`, or `external-scheduler` (declaration-only)"),
            ("submission_template", "string", "wrapper with `${command}` and `${nodes}`"),
            ("environment", "table", "extra environment exported to every step"),
            ("devices_per_node", "integer", "accelerators per node"),
            ("device_memory_bytes", "integer", "memory per accelerator"),
        ],
    ),
];

/// Renders the schema reference document.
pub fn schema_reference() -> String {
    let mut out = String::from(
        "# Benchmark definition schema\n\n\
         Definition files are TOML documents, one benchmark per file. Every field below is\n\
         validated on load; any violation is reported as a finding and rejects the document\n\
         as a whole.\n",
    );
    for (name, blurb, fields) in TYPES {
        out.push_str(&format!("\n## {name}\n\n{blurb}\n\n"));
        out.push_str("| field | type | meaning |\n|---|---|---|\n");
        for (field, ty, meaning) in *fields {
            out.push_str(&format!("| `{field}` | {ty} | {meaning} |\n"));
        }
    }
    out.push_str(
        "\n## Runtime contract\n\n\
         Steps run in dependency order (declaration order breaks ties) inside\n\
         `runs/<run-id>/<benchmark>/<workpackage>/<step>/`, which collects `stdout.txt`,\n\
         `stderr.txt`, and `rc.txt` (decimal exit status, newline-terminated). Every step\n\
         sees `BENCH_NODES` (the workpackage's node count) and `BENCH_SEED`. Template\n\
         expansion is single-pass: substituted text is never rescanned.\n",
    );
    out
}
