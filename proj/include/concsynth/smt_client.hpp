#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "concsynth/ast.hpp"
#include "concsynth/formula.hpp"
#include "concsynth/sexpr.hpp"
#include "concsynth/solver/lia.hpp"

namespace concsynth {

struct SolverSpawnError : std::runtime_error {
  explicit SolverSpawnError(const std::string& what)
      : std::runtime_error(what) {}
};

struct ProtocolError : std::runtime_error {
  explicit ProtocolError(const std::string& what)
      : std::runtime_error(what) {}
};

// Raised by the synthesis engines when an SMT query comes back unknown and
// the result can no longer be trusted either way.
struct EngineInconclusive : std::runtime_error {
  explicit EngineInconclusive(const std::string& what)
      : std::runtime_error(what) {}
};

enum class SmtStatus { Sat, Unsat, Unknown };

struct SmtResult {
  SmtStatus status = SmtStatus::Unknown;
  Valuation model;     // total over the declared symbols when Sat
  std::string reason;  // for Unknown
};

struct SmtStats {
  std::size_t queries = 0;
  std::size_t sat = 0;
  std::size_t unsat = 0;
  std::size_t unknown = 0;
  long long total_ms = 0;
};

struct SmtOptions {
  // Whitespace-separated command line of an SMT-LIB2 solver executable;
  // empty or "internal" selects the built-in engine.
  std::string solver_cmd;
  int timeout_ms = 10000;
};

// Resolution order for the backend: explicit option, CONCSYNTH_SMT, the
// built-in engine.
inline std::string default_solver_cmd() {
  const char* env = std::getenv("CONCSYNTH_SMT");
  if (env && *env) return env;
  return "";
}

// -------- SMT-LIB text for formulas --------

inline void print_linexpr_smt(std::ostream& os, const LinExpr& e,
                              const VarNames& vars) {
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < e.coeffs.size(); ++i) {
    if (e.coeffs[i] == 0) continue;
    if (e.coeffs[i] == 1) {
      parts.push_back(vars.names[i]);
    } else {
      std::ostringstream t;
      t << "(* ";
      print_int(t, e.coeffs[i]);
      t << ' ' << vars.names[i] << ')';
      parts.push_back(t.str());
    }
  }
  if (e.offset != 0 || parts.empty()) {
    std::ostringstream t;
    print_int(t, e.offset);
    parts.push_back(t.str());
  }
  if (parts.size() == 1) {
    os << parts[0];
    return;
  }
  os << "(+";
  for (const auto& p : parts) os << ' ' << p;
  os << ')';
}

inline void print_formula_smt(std::ostream& os, const FormulaPtr& f,
                              const VarNames& vars) {
  switch (f->kind) {
    case Formula::Kind::True:
      os << "true";
      return;
    case Formula::Kind::False:
      os << "false";
      return;
    case Formula::Kind::Geq:
      os << "(>= ";
      print_linexpr_smt(os, f->lin, vars);
      os << " 0)";
      return;
    case Formula::Kind::ModEq:
      os << "(= (mod ";
      print_linexpr_smt(os, f->lin, vars);
      os << ' ';
      print_int(os, f->m);
      os << ") ";
      print_int(os, f->r);
      os << ')';
      return;
    case Formula::Kind::Not:
      os << "(not ";
      print_formula_smt(os, f->kids[0], vars);
      os << ')';
      return;
    case Formula::Kind::And:
    case Formula::Kind::Or:
      os << (f->kind == Formula::Kind::And ? "(and" : "(or");
      for (const auto& k : f->kids) {
        os << ' ';
        print_formula_smt(os, k, vars);
      }
      os << ')';
      return;
  }
}

inline std::string formula_smt_str(const FormulaPtr& f, const VarNames& vars) {
  std::ostringstream os;
  print_formula_smt(os, f, vars);
  return os.str();
}

namespace detail {

// Child solver process with SMT-LIB2 text on its stdin/stdout.
class SolverProcess {
 public:
  explicit SolverProcess(std::string cmd) : cmd_(std::move(cmd)) {}
  ~SolverProcess() { shutdown(); }

  SolverProcess(const SolverProcess&) = delete;
  SolverProcess& operator=(const SolverProcess&) = delete;

  bool alive() const { return pid_ > 0; }

  void start() {
    signal(SIGPIPE, SIG_IGN);
    std::vector<std::string> args;
    std::istringstream split(cmd_);
    for (std::string tok; split >> tok;) args.push_back(tok);
    if (args.empty()) throw SolverSpawnError("empty solver command");
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw SolverSpawnError("pipe failed");
    pid_t pid = fork();
    if (pid < 0) throw SolverSpawnError("fork failed");
    if (pid == 0) {
      dup2(to_child[0], 0);
      dup2(from_child[1], 1);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      execvp(argv[0], argv.data());
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    pid_ = pid;
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    buf_.clear();
    ever_replied_ = false;
  }

  void shutdown() {
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
    if (in_fd_ >= 0) close(in_fd_);
    if (out_fd_ >= 0) close(out_fd_);
    in_fd_ = out_fd_ = -1;
  }

  void send(const std::string& text) {
    std::size_t off = 0;
    while (off < text.size()) {
      ssize_t n = write(in_fd_, text.data() + off, text.size() - off);
      if (n < 0) throw ProtocolError("solver pipe closed while writing");
      off += (std::size_t)n;
    }
  }

  // Reads one nonempty reply line; returns empty string on deadline.
  std::string read_line(std::chrono::steady_clock::time_point deadline) {
    while (true) {
      std::size_t nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
          line.pop_back();
        if (line.empty()) continue;
        ever_replied_ = true;
        return line;
      }
      if (!fill(deadline)) return "";
    }
  }

  // Reads a balanced s-expression reply; returns empty string on deadline.
  std::string read_sexpr(std::chrono::steady_clock::time_point deadline) {
    while (true) {
      std::size_t depth = 0, i = 0;
      bool started = false;
      for (; i < buf_.size(); ++i) {
        char c = buf_[i];
        if (!started) {
          if (c == '(') {
            started = true;
            depth = 1;
          } else if (!std::isspace((unsigned char)c)) {
            // Bare-atom reply (e.g. an error word); treat the line as it.
            return read_line(deadline);
          }
          continue;
        }
        if (c == '(') ++depth;
        if (c == ')' && --depth == 0) {
          std::string out = buf_.substr(0, i + 1);
          buf_.erase(0, i + 1);
          ever_replied_ = true;
          return out;
        }
      }
      if (!fill(deadline)) return "";
    }
  }

  bool ever_replied() const { return ever_replied_; }

 private:
  bool fill(std::chrono::steady_clock::time_point deadline) {
    auto now = std::chrono::steady_clock::now();
    auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
            .count();
    if (left < 0) return false;
    struct pollfd pfd {
      out_fd_, POLLIN, 0
    };
    int pr = poll(&pfd, 1, (int)std::min<long long>(left, 1 << 30));
    if (pr <= 0) return false;
    char chunk[4096];
    ssize_t n = read(out_fd_, chunk, sizeof chunk);
    if (n <= 0)
      throw ProtocolError(ever_replied_ ? "solver process closed its output"
                                        : "solver failed to start");
    buf_.append(chunk, (std::size_t)n);
    return true;
  }

  std::string cmd_;
  pid_t pid_ = -1;
  int in_fd_ = -1, out_fd_ = -1;
  std::string buf_;
  bool ever_replied_ = false;
};

}  // namespace detail

// One solver session: either a child process spoken to in SMT-LIB2, or the
// built-in LIA engine. Each query is self-contained (reset, declare,
// assert, check-sat, get-value); a crashed child is respawned on the next
// query. Sessions are not shareable across workers.
class SmtSession {
 public:
  explicit SmtSession(SmtOptions opts = {}) : opts_(std::move(opts)) {
    if (opts_.solver_cmd == "internal") opts_.solver_cmd.clear();
  }

  bool external() const { return !opts_.solver_cmd.empty(); }

  void push() { ++depth_; }
  void pop() {
    if (depth_ == 0) throw std::logic_error("pop on empty assertion stack");
    --depth_;
  }
  int depth() const { return depth_; }

  SmtResult check_sat(const std::vector<FormulaPtr>& fs,
                      const VarNames& vars) {
    auto t0 = std::chrono::steady_clock::now();
    SmtResult r = external() ? check_external(fs, vars)
                             : check_internal(fs, vars);
    auto t1 = std::chrono::steady_clock::now();
    ++stats_.queries;
    stats_.total_ms +=
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    switch (r.status) {
      case SmtStatus::Sat:
        ++stats_.sat;
        break;
      case SmtStatus::Unsat:
        ++stats_.unsat;
        break;
      case SmtStatus::Unknown:
        ++stats_.unknown;
        break;
    }
    return r;
  }

  SmtResult check_sat(const FormulaPtr& f, const VarNames& vars) {
    return check_sat(std::vector<FormulaPtr>{f}, vars);
  }

  SmtResult check_sat(const CondPtr& c, const VarNames& vars) {
    return check_sat(linearize(c, vars.names.size()), vars);
  }

  struct Validity {
    enum class Kind { Valid, Invalid, Unknown };
    Kind kind = Kind::Unknown;
    Valuation witness;  // falsifying valuation when Invalid
    std::string reason;
  };

  Validity check_valid(const FormulaPtr& f, const VarNames& vars) {
    SmtResult r = check_sat(f_not(f), vars);
    Validity v;
    switch (r.status) {
      case SmtStatus::Unsat:
        v.kind = Validity::Kind::Valid;
        break;
      case SmtStatus::Sat:
        v.kind = Validity::Kind::Invalid;
        v.witness = r.model;
        break;
      case SmtStatus::Unknown:
        v.kind = Validity::Kind::Unknown;
        v.reason = r.reason;
        break;
    }
    return v;
  }

  Validity check_valid(const CondPtr& c, const VarNames& vars) {
    return check_valid(linearize(c, vars.names.size()), vars);
  }

  const SmtStats& stats() const { return stats_; }
  int timeout_ms() const { return opts_.timeout_ms; }

 private:
  SmtResult check_internal(const std::vector<FormulaPtr>& fs,
                           const VarNames& vars) {
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(opts_.timeout_ms);
    LiaResult r = lia_check(fs, vars.names.size(), [deadline] {
      return std::chrono::steady_clock::now() > deadline;
    });
    SmtResult out;
    switch (r.verdict) {
      case SatVerdict::Sat:
        out.status = SmtStatus::Sat;
        out.model = r.model;
        break;
      case SatVerdict::Unsat:
        out.status = SmtStatus::Unsat;
        break;
      case SatVerdict::Unknown:
        out.status = SmtStatus::Unknown;
        out.reason = "timeout";
        break;
    }
    return out;
  }

  SmtResult check_external(const std::vector<FormulaPtr>& fs,
                           const VarNames& vars) {
    if (!proc_ || !proc_->alive()) {
      proc_ = std::make_unique<detail::SolverProcess>(opts_.solver_cmd);
      proc_->start();
    }
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(opts_.timeout_ms);
    std::ostringstream script;
    script << "(reset)\n(set-logic QF_LIA)\n";
    for (const auto& name : vars.names)
      script << "(declare-const " << name << " Int)\n";
    for (const auto& f : fs) {
      script << "(assert ";
      print_formula_smt(script, f, vars);
      script << ")\n";
    }
    script << "(check-sat)\n";
    SmtResult out;
    try {
      proc_->send(script.str());
      std::string verdict = proc_->read_line(deadline);
      if (verdict.empty()) return on_timeout();
      if (verdict == "unsat") {
        out.status = SmtStatus::Unsat;
        return out;
      }
      if (verdict == "unknown") {
        out.status = SmtStatus::Unknown;
        out.reason = "solver reported unknown";
        return out;
      }
      if (verdict != "sat")
        throw ProtocolError("unexpected check-sat reply: " + verdict);
      out.status = SmtStatus::Sat;
      if (vars.names.empty()) return out;
      std::ostringstream gv;
      gv << "(get-value (";
      for (std::size_t i = 0; i < vars.names.size(); ++i) {
        if (i) gv << ' ';
        gv << vars.names[i];
      }
      gv << "))\n";
      proc_->send(gv.str());
      std::string reply = proc_->read_sexpr(deadline);
      if (reply.empty()) return on_timeout();
      out.model = parse_model(reply, vars);
      return out;
    } catch (const ProtocolError&) {
      proc_->shutdown();
      throw;
    }
  }

  SmtResult on_timeout() {
    proc_->shutdown();
    SmtResult out;
    out.status = SmtStatus::Unknown;
    out.reason = "timeout";
    return out;
  }

  static Valuation parse_model(const std::string& reply,
                               const VarNames& vars) {
    std::vector<Sexpr> parsed = parse_sexprs(reply);
    if (parsed.size() != 1 || parsed[0].is_atom)
      throw ProtocolError("malformed get-value reply: " + reply);
    Valuation v;
    v.values.assign(vars.names.size(), Int(0));
    for (const Sexpr& pair : parsed[0].kids) {
      if (pair.is_atom || pair.size() != 2 || !pair[0].is_atom)
        throw ProtocolError("malformed model binding in: " + reply);
      std::size_t idx = vars.names.size();
      for (std::size_t i = 0; i < vars.names.size(); ++i)
        if (vars.names[i] == pair[0].atom) {
          idx = i;
          break;
        }
      if (idx == vars.names.size())
        throw ProtocolError("model names unknown symbol " + pair[0].atom);
      v.values[idx] = parse_value(pair[1]);
    }
    return v;
  }

  static Int parse_value(const Sexpr& e) {
    if (e.is_atom) return Int(e.atom);
    if (e.size() == 2 && e[0].is("-") && e[1].is_atom)
      return Int("-" + e[1].atom);
    throw ProtocolError("unparseable model value: " + e.str());
  }

  SmtOptions opts_;
  SmtStats stats_;
  int depth_ = 0;
  std::unique_ptr<detail::SolverProcess> proc_;
};

}  // namespace concsynth
