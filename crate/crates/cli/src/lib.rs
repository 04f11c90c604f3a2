//! `hazreg`: a command-line client for every registry role, offline model
//! card linting, operator token provisioning and the server launcher.
//!
//! [`run_cli`] takes its arguments, environment and output streams
//! explicitly so it can be driven in-process.

mod client;
mod render;

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use clap::{Args, Parser, Subcommand};
use hazreg_core::domain::Role;
use hazreg_core::formats::{check_model_card, to_canonical_bytes, LintContext};
use hazreg_service::tokens::TokenStore;
use hazreg_service::Config;
use serde_json::{json, Map, Value};

pub use client::{Client, Failure};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_TRANSPORT: i32 = 2;
pub const EXIT_DENIED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hazreg",
    version,
    about = "Coordinated disclosure registry for AI hazards"
)]
struct Cli {
    /// Print canonical JSON instead of human-readable text.
    #[arg(long, global = true)]
    json: bool,
    /// Registry base URL (overrides HAZREG_SERVER).
    #[arg(long, global = true, value_name = "URL")]
    server: Option<String>,
    /// Bearer token (overrides HAZREG_TOKEN).
    #[arg(long, global = true)]
    token: Option<String>,
    /// Service configuration file (overrides HAZREG_CONFIG).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Model cards.
    #[command(subcommand)]
    Card(CardCmd),
    /// Hazard reports.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Disclosure cases.
    #[command(subcommand)]
    Case(CaseCmd),
    /// Run the panel statistics on a case under adjudication.
    Adjudicate { case_id: String },
    /// Public CFE records.
    #[command(subcommand)]
    Cfe(CfeCmd),
    /// The public advisory feed.
    #[command(subcommand)]
    Advisory(AdvisoryCmd),
    /// Hazard exposure statements.
    #[command(subcommand)]
    Hex(HexCmd),
    /// Public exports.
    #[command(subcommand)]
    Export(ExportCmd),
    /// Workflow and finding self-description.
    #[command(subcommand)]
    Meta(MetaCmd),
    /// Operator tasks that act on the data directory directly.
    #[command(subcommand)]
    Admin(AdminCmd),
    /// Run the registry until interrupted.
    Serve,
}

#[derive(Debug, Subcommand)]
enum CardCmd {
    /// Lint a card locally, without a server.
    Lint {
        file: PathBuf,
    },
    /// Register a card as its vendor.
    Push {
        file: PathBuf,
        /// Only report the server's findings.
        #[arg(long)]
        dry_run: bool,
    },
    Show {
        name: String,
        version: String,
    },
}

#[derive(Debug, Subcommand)]
enum ReportCmd {
    Submit { file: PathBuf },
}

#[derive(Debug, Subcommand)]
enum CaseCmd {
    List,
    Show {
        case_id: String,
    },
    /// Actions the caller may take now.
    Actions {
        case_id: String,
    },
    Transition {
        case_id: String,
        action: String,
        #[command(flatten)]
        payload: PayloadArgs,
    },
    #[command(subcommand)]
    Evidence(EvidenceCmd),
    /// Take a vendor-rejected case to the adjudication panel.
    Escalate {
        case_id: String,
        #[arg(long)]
        expected_version: Option<u64>,
    },
}

#[derive(Debug, Args)]
struct PayloadArgs {
    /// JSON object file with the action payload.
    #[arg(long, value_name = "FILE")]
    payload: Option<PathBuf>,
    /// One payload field; the value is read as JSON when it parses, else as text.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    fields: Vec<String>,
    /// Fail unless the case is at this version. Defaults to its current one.
    #[arg(long)]
    expected_version: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum EvidenceCmd {
    Add {
        case_id: String,
        /// Sample size.
        #[arg(long)]
        n: u64,
        /// Violations observed.
        #[arg(long)]
        k: u64,
        #[arg(long, default_value = "")]
        protocol: String,
        /// Raw prompt/output pairs, stored sealed.
        #[arg(long, value_name = "FILE")]
        sealed: Option<PathBuf>,
        #[arg(long)]
        expected_version: Option<u64>,
    },
}

#[derive(Debug, Subcommand)]
enum CfeCmd {
    Show { cfe_id: String },
}

#[derive(Debug, Subcommand)]
enum AdvisoryCmd {
    List {
        #[arg(long)]
        page: Option<String>,
        #[arg(long)]
        page_size: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum HexCmd {
    /// Derive statements for deployment profiles.
    Evaluate {
        cfe_id: String,
        /// One profile object or an array of them.
        profile_file: PathBuf,
        /// Lineage graph to evaluate every descendant variant.
        #[arg(long, value_name = "FILE")]
        lineage: Option<PathBuf>,
    },
    /// Record a statement as the CFE's vendor or the committee.
    Issue {
        file: PathBuf,
    },
    List {
        cfe_id: String,
    },
}

#[derive(Debug, Subcommand)]
enum ExportCmd {
    PublicDb {
        /// Write here instead of the output stream.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum MetaCmd {
    TransitionTable,
    FindingCatalogue,
}

#[derive(Debug, Subcommand)]
enum AdminCmd {
    #[command(subcommand)]
    Token(TokenCmd),
}

#[derive(Debug, Subcommand)]
enum TokenCmd {
    Issue {
        #[arg(long)]
        actor: String,
        /// Repeat for several roles.
        #[arg(long = "role", required = true)]
        roles: Vec<Role>,
        #[arg(long, default_value_t = 30)]
        ttl_days: i64,
        /// Defaults to the configured data directory.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

/// What a command produced: the document, how to show it to a person, and
/// the exit status when the result itself is a failure (lint errors).
struct Output {
    value: Value,
    human: String,
    code: i32,
}

impl Output {
    fn ok(value: Value, human: String) -> Self {
        Self {
            value,
            human,
            code: EXIT_OK,
        }
    }
}

struct Context<'a> {
    env: &'a BTreeMap<String, String>,
    config_file: Option<PathBuf>,
    server: Option<String>,
    token: Option<String>,
}

impl Context<'_> {
    fn config(&self) -> Result<Config, Failure> {
        Config::load(self.config_file.as_deref(), self.env)
            .map_err(|e| Failure::Usage(e.to_string()))
    }

    /// Flag, then environment, then the configured bind address.
    fn client(&self) -> Result<Client, Failure> {
        let server = match self
            .server
            .clone()
            .or_else(|| self.env.get("HAZREG_SERVER").cloned())
        {
            Some(url) => url,
            None => format!("http://{}", self.config()?.bind),
        };
        let token = self
            .token
            .clone()
            .or_else(|| self.env.get("HAZREG_TOKEN").cloned());
        Ok(Client::new(&server, token))
    }
}

/// Parse `argv` (program name first), run the command and return the exit
/// status. Results go to `out`; diagnostics only ever go to `err`.
pub fn run_cli<I, T>(
    argv: I,
    env: &BTreeMap<String, String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let _ = write!(err, "{e}");
            return EXIT_INVALID;
        }
    };
    let json_mode = cli.json;
    let ctx = Context {
        env,
        config_file: cli.config,
        server: cli.server,
        token: cli.token,
    };
    match execute(cli.command, &ctx) {
        Ok(output) => {
            let written = if json_mode {
                out.write_all(&canonical(&output.value))
                    .and_then(|_| writeln!(out))
            } else {
                write!(out, "{}", output.human)
            };
            match written {
                Ok(()) => output.code,
                Err(e) => {
                    let _ = writeln!(err, "error: cannot write output: {e}");
                    EXIT_TRANSPORT
                }
            }
        }
        Err(failure) => {
            if json_mode {
                let _ = err.write_all(&canonical(&failure.document()));
                let _ = writeln!(err);
            } else {
                let _ = write!(err, "{}", render::failure(&failure));
            }
            failure.exit_code()
        }
    }
}

fn canonical(value: &Value) -> Vec<u8> {
    to_canonical_bytes(value).unwrap_or_else(|_| b"null".to_vec())
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    serde_json::from_slice(&read_file(path)?)
        .map_err(|e| Failure::Usage(format!("{} is not JSON: {e}", path.display())))
}

fn build_payload(args: &PayloadArgs) -> Result<Value, Failure> {
    let mut fields = match &args.payload {
        None => Map::new(),
        Some(path) => match read_json(path)? {
            Value::Object(map) => map,
            _ => {
                return Err(Failure::Usage(format!(
                    "{} must hold a JSON object",
                    path.display()
                )))
            }
        },
    };
    for field in &args.fields {
        let (key, raw) = field
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("`--set {field}` is not KEY=VALUE")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        fields.insert(key.to_string(), value);
    }
    Ok(Value::Object(fields))
}

fn transition(
    client: &Client,
    case_id: &str,
    action: &str,
    payload: Value,
    expected: Option<u64>,
) -> Result<Output, Failure> {
    let version = match expected {
        Some(v) => v,
        None => client.get(&format!("/cases/{case_id}/actions"))?["version"]
            .as_u64()
            .ok_or_else(|| Failure::Transport("actions response carries no version".into()))?,
    };
    let body = json!({"action": action, "payload": payload, "expected_version": version});
    let case = client.post(&format!("/cases/{case_id}/transitions"), &body)?;
    let human = render::case_line(&case);
    Ok(Output::ok(case, human))
}

fn execute(command: Command, ctx: &Context) -> Result<Output, Failure> {
    match command {
        Command::Card(CardCmd::Lint { file }) => {
            let bytes = read_file(&file)?;
            let lint = LintContext::default().with_allowlist(ctx.config()?.license_allowlist);
            let (card, findings) = check_model_card(&bytes, &lint);
            let errors = findings.iter().any(|f| f.is_error());
            let value = json!({
                "model_ref": card.map(|c| c.model_ref()),
                "findings": findings,
            });
            let human = render::findings(&findings);
            Ok(Output {
                value,
                human,
                code: if errors { EXIT_INVALID } else { EXIT_OK },
            })
        }
        Command::Card(CardCmd::Push { file, dry_run }) => {
            let bytes = read_file(&file)?;
            let path = if dry_run {
                "/model-cards?dry_run=true"
            } else {
                "/model-cards"
            };
            let value = ctx.client()?.post_bytes(path, bytes)?;
            let findings: Vec<hazreg_core::formats::Finding> =
                serde_json::from_value(value["findings"].clone()).unwrap_or_default();
            let mut human = render::findings(&findings);
            if value["registered"] == json!(true) {
                human.push_str(&format!(
                    "registered {}\n",
                    render::model_ref(&value["model_ref"])
                ));
            }
            let errors = findings.iter().any(|f| f.is_error());
            Ok(Output {
                value,
                human,
                code: if dry_run && errors {
                    EXIT_INVALID
                } else {
                    EXIT_OK
                },
            })
        }
        Command::Card(CardCmd::Show { name, version }) => {
            let value = ctx
                .client()?
                .get(&format!("/model-cards/{name}/{version}"))?;
            Ok(Output::ok(value.clone(), render::pretty(&value)))
        }
        Command::Report(ReportCmd::Submit { file }) => {
            let value = ctx.client()?.post_bytes("/reports", read_file(&file)?)?;
            let human = render::case_line(&value);
            Ok(Output::ok(value, human))
        }
        Command::Case(CaseCmd::List) => {
            let value = ctx.client()?.get("/cases")?;
            let human = render::case_table(&value["cases"]);
            Ok(Output::ok(value, human))
        }
        Command::Case(CaseCmd::Show { case_id }) => {
            let value = ctx.client()?.get(&format!("/cases/{case_id}"))?;
            Ok(Output::ok(value.clone(), render::pretty(&value)))
        }
        Command::Case(CaseCmd::Actions { case_id }) => {
            let value = ctx.client()?.get(&format!("/cases/{case_id}/actions"))?;
            let human = render::actions(&value);
            Ok(Output::ok(value, human))
        }
        Command::Case(CaseCmd::Transition {
            case_id,
            action,
            payload,
        }) => {
            let body = build_payload(&payload)?;
            transition(
                &ctx.client()?,
                &case_id,
                &action,
                body,
                payload.expected_version,
            )
        }
        Command::Case(CaseCmd::Escalate {
            case_id,
            expected_version,
        }) => transition(
            &ctx.client()?,
            &case_id,
            "escalate",
            json!({}),
            expected_version,
        ),
        Command::Case(CaseCmd::Evidence(EvidenceCmd::Add {
            case_id,
            n,
            k,
            protocol,
            sealed,
            expected_version,
        })) => {
            let mut body = json!({"n": n, "k": k, "sampling_protocol": protocol});
            if let Some(path) = sealed {
                body["sealed_payload"] = json!(STANDARD.encode(read_file(&path)?));
            }
            if let Some(v) = expected_version {
                body["expected_version"] = json!(v);
            }
            let value = ctx
                .client()?
                .post(&format!("/cases/{case_id}/evidence"), &body)?;
            let human = format!(
                "{} now holds {} evidence set(s) (version {})\n",
                case_id, value["evidence_count"], value["version"]
            );
            Ok(Output::ok(value, human))
        }
        Command::Adjudicate { case_id } => {
            let value = ctx
                .client()?
                .post(&format!("/cases/{case_id}/adjudicate"), &json!({}))?;
            let human = render::adjudication(&value);
            Ok(Output::ok(value, human))
        }
        Command::Cfe(CfeCmd::Show { cfe_id }) => {
            let value = ctx.client()?.get(&format!("/cfe/{cfe_id}"))?;
            Ok(Output::ok(value.clone(), render::pretty(&value)))
        }
        Command::Advisory(AdvisoryCmd::List { page, page_size }) => {
            let mut query = Vec::new();
            if let Some(p) = page {
                query.push(format!("page={p}"));
            }
            if let Some(s) = page_size {
                query.push(format!("page_size={s}"));
            }
            let path = if query.is_empty() {
                "/advisories".to_string()
            } else {
                format!("/advisories?{}", query.join("&"))
            };
            let value = ctx.client()?.get(&path)?;
            let human = render::advisories(&value);
            Ok(Output::ok(value, human))
        }
        Command::Hex(HexCmd::Evaluate {
            cfe_id,
            profile_file,
            lineage,
        }) => {
            let profiles = match read_json(&profile_file)? {
                Value::Array(items) => Value::Array(items),
                single => json!([single]),
            };
            let mut body = json!({"cfe_id": cfe_id, "profiles": profiles});
            if let Some(path) = lineage {
                body["lineage"] = read_json(&path)?;
            }
            let value = ctx.client()?.post("/hex/evaluate", &body)?;
            let human = render::statements(&value["statements"]);
            Ok(Output::ok(value, human))
        }
        Command::Hex(HexCmd::Issue { file }) => {
            let value = ctx
                .client()?
                .post_bytes("/hex/statements", read_file(&file)?)?;
            let human = render::statements(&json!([value]));
            Ok(Output::ok(value, human))
        }
        Command::Hex(HexCmd::List { cfe_id }) => {
            let value = ctx
                .client()?
                .get(&format!("/hex/statements?cfe_id={cfe_id}"))?;
            let human = render::statements(&value["statements"]);
            Ok(Output::ok(value, human))
        }
        Command::Export(ExportCmd::PublicDb { output }) => {
            let value = ctx.client()?.get("/export/public-db")?;
            match output {
                Some(path) => {
                    std::fs::write(&path, canonical(&value)).map_err(|e| {
                        Failure::Usage(format!("cannot write {}: {e}", path.display()))
                    })?;
                    let human = format!(
                        "wrote {} CFE record(s) to {}\n",
                        value["cfe_count"],
                        path.display()
                    );
                    Ok(Output::ok(
                        json!({"path": path, "cfe_count": value["cfe_count"]}),
                        human,
                    ))
                }
                None => Ok(Output::ok(value.clone(), render::pretty(&value))),
            }
        }
        Command::Meta(which) => {
            let path = match which {
                MetaCmd::TransitionTable => "/meta/transition-table",
                MetaCmd::FindingCatalogue => "/meta/finding-catalogue",
            };
            let value = ctx.client()?.get(path)?;
            Ok(Output::ok(value.clone(), render::pretty(&value)))
        }
        Command::Admin(AdminCmd::Token(TokenCmd::Issue {
            actor,
            roles,
            ttl_days,
            data_dir,
        })) => {
            let dir = match data_dir {
                Some(dir) => dir,
                None => ctx.config()?.data_dir,
            };
            std::fs::create_dir_all(&dir)
                .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
            let store = TokenStore::open(&dir).map_err(|e| Failure::Usage(e.to_string()))?;
            let roles: BTreeSet<Role> = roles.into_iter().collect();
            let (token, secret) = store
                .issue(
                    &actor,
                    roles,
                    chrono::Duration::days(ttl_days),
                    chrono::Utc::now(),
                )
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let value = json!({
                "token_id": token.token_id,
                "actor_id": token.actor_id,
                "roles": token.roles,
                "expires_at": token.expires_at,
                "secret": secret,
            });
            Ok(Output::ok(value, format!("{secret}\n")))
        }
        Command::Serve => {
            let config = ctx.config()?;
            let _ = tracing_subscriber::fmt()
                .with_writer(std::io::stderr)
                .try_init();
            let runtime =
                tokio::runtime::Runtime::new().map_err(|e| Failure::Transport(e.to_string()))?;
            runtime
                .block_on(hazreg_service::serve(config))
                .map_err(|e| Failure::Transport(e.to_string()))?;
            Ok(Output::ok(json!({"stopped": true}), String::new()))
        }
    }
}
