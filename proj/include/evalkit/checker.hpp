#pragma once

// Syntax checkers behind the compilation-accuracy metric: two shallow built-in
// line grammars and an external-command plugin that runs a real toolchain.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "evalkit/error.hpp"

namespace evalkit {

enum class CheckerKind { builtin_assembly, builtin_python, external_command };

struct SyntaxChecker {
  std::string name;
  CheckerKind kind = CheckerKind::builtin_assembly;
  std::string command;  // external only; `{file}` is replaced by the snippet path
  std::chrono::milliseconds timeout{10'000};

  static SyntaxChecker assembly() { return {"builtin-assembly", CheckerKind::builtin_assembly, {}, {}}; }
  static SyntaxChecker python() { return {"builtin-python", CheckerKind::builtin_python, {}, {}}; }
  static SyntaxChecker external(std::string name, std::string command, std::chrono::milliseconds timeout) {
    return {std::move(name), CheckerKind::external_command, std::move(command), timeout};
  }
};

struct CheckResult {
  bool accepted = false;
  std::string diagnostic;
};

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (true) {
    auto end = s.find('\n', start);
    lines.push_back(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return lines;
}

inline std::string_view trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Splits on commas outside brackets and quotes. Returns false on unbalanced input.
inline bool split_operands(std::string_view s, std::vector<std::string_view>& out) {
  int depth = 0;
  char quote = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'' || c == '`') quote = c;
    else if (c == '[' || c == '(') ++depth;
    else if (c == ']' || c == ')') {
      if (--depth < 0) return false;
    } else if (c == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  if (quote || depth != 0) return false;
  out.push_back(trim(s.substr(start)));
  return true;
}

inline CheckResult check_assembly_line(std::string_view line) {
  // strip comment
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (quote) {
      if (line[i] == quote) quote = 0;
    } else if (line[i] == '"' || line[i] == '\'') {
      quote = line[i];
    } else if (line[i] == ';') {
      line = line.substr(0, i);
      break;
    }
  }
  line = trim(line);
  static const std::regex label(R"(^([A-Za-z_.$?][A-Za-z0-9_.$@?]*):)");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(line.begin(), line.end(), m, label)) line = trim(line.substr(m.length(0)));
  if (line.empty()) return {true, {}};

  static const std::regex opcode(R"(^[A-Za-z][A-Za-z0-9_.]*)");
  if (!std::regex_search(line.begin(), line.end(), m, opcode)) return {false, "expected opcode in '" + std::string(line) + "'"};
  auto rest = line.substr(m.length(0));
  if (!rest.empty() && rest.front() != ' ' && rest.front() != '\t')
    return {false, "malformed opcode in '" + std::string(line) + "'"};
  rest = trim(rest);
  if (rest.empty()) return {true, {}};
  std::vector<std::string_view> operands;
  if (!split_operands(rest, operands)) return {false, "unbalanced operand in '" + std::string(line) + "'"};
  for (auto op : operands) {
    if (op.empty()) return {false, "missing operand in '" + std::string(line) + "'"};
  }
  return {true, {}};
}

inline bool python_line_ends_with_operator(std::string_view line) {
  static constexpr std::string_view ops = "=+-*/%&|^<>~.\\";
  if (line.empty()) return false;
  // trailing backslash is a legal line continuation
  if (line.back() == '\\') return false;
  return ops.find(line.back()) != std::string_view::npos;
}

inline CheckResult check_python(std::string_view snippet) {
  static const std::vector<std::string_view> block_heads = {"if", "elif", "for", "while", "def", "class", "with",
                                                            "except", "async"};
  static const std::vector<std::string_view> bare_heads = {"else", "try", "finally"};
  int depth = 0;
  char quote = 0;
  bool any = false;
  for (auto raw : split_lines(snippet)) {
    auto line = trim(raw);
    // strip comments outside strings, track brackets
    std::string code;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quote) {
        if (c == '\\') {
          code.push_back(c);
          if (i + 1 < line.size()) code.push_back(line[++i]);
          continue;
        }
        if (c == quote) quote = 0;
        code.push_back(c);
        continue;
      }
      if (c == '#') break;
      if (c == '"' || c == '\'') quote = c;
      else if (c == '(' || c == '[' || c == '{') ++depth;
      else if (c == ')' || c == ']' || c == '}') {
        if (--depth < 0) return {false, "unbalanced closing bracket"};
      }
      code.push_back(c);
    }
    if (quote) return {false, "unterminated string literal"};
    auto stmt = trim(code);
    if (stmt.empty()) continue;
    any = true;
    if (depth > 0) continue;  // statement continues on the next line
    std::size_t word_end = 0;
    while (word_end < stmt.size() && (std::isalnum(static_cast<unsigned char>(stmt[word_end])) || stmt[word_end] == '_'))
      ++word_end;
    const auto head = stmt.substr(0, word_end);
    const bool is_block = std::ranges::find(block_heads, head) != block_heads.end();
    const bool is_bare = std::ranges::find(bare_heads, head) != bare_heads.end();
    if (is_bare) {
      auto after = trim(stmt.substr(word_end));
      if (after.empty() || after.front() != ':') return {false, "'" + std::string(head) + "' must be followed by ':'"};
    } else if (is_block && stmt.find(':') == std::string_view::npos) {
      return {false, "'" + std::string(head) + "' statement missing ':'"};
    }
    if (!is_block && !is_bare && stmt.back() == ':' && head != "lambda")
      return {false, "unexpected ':' ending a non-block statement"};
    if (python_line_ends_with_operator(stmt)) return {false, "statement ends with an operator"};
  }
  if (depth != 0) return {false, "unbalanced brackets"};
  if (!any) return {false, "empty snippet"};
  return {true, {}};
}

inline std::vector<std::string> split_command(std::string_view templ, const std::string& file) {
  std::vector<std::string> argv;
  std::istringstream in{std::string(templ)};
  std::string word;
  while (in >> word) {
    for (std::size_t pos; (pos = word.find("{file}")) != std::string::npos;) word.replace(pos, 6, file);
    argv.push_back(word);
  }
  return argv;
}

inline bool resolve_executable(const std::string& prog) {
  auto executable = [](const std::filesystem::path& p) { return ::access(p.c_str(), X_OK) == 0 && !std::filesystem::is_directory(p); };
  if (prog.find('/') != std::string::npos) return executable(prog);
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::string_view dirs = path;
  while (!dirs.empty()) {
    auto colon = dirs.find(':');
    auto dir = dirs.substr(0, colon);
    if (!dir.empty() && executable(std::filesystem::path(dir) / prog)) return true;
    if (colon == std::string_view::npos) break;
    dirs.remove_prefix(colon + 1);
  }
  return false;
}

// Temporary snippet file, removed on destruction.
class TempFile {
 public:
  explicit TempFile(std::string_view contents) {
    auto dir = std::filesystem::temp_directory_path();
    std::string pattern = (dir / "evalkit-snippet-XXXXXX").string();
    int fd = ::mkstemp(pattern.data());
    if (fd < 0) throw CheckerError(std::string("cannot create temp file: ") + std::strerror(errno));
    path_ = pattern;
    std::string data(contents);
    if (data.empty() || data.back() != '\n') data.push_back('\n');
    std::size_t written = 0;
    while (written < data.size()) {
      auto n = ::write(fd, data.data() + written, data.size() - written);
      if (n <= 0) {
        ::close(fd);
        throw CheckerError("cannot write temp file " + path_);
      }
      written += static_cast<std::size_t>(n);
    }
    ::close(fd);
  }
  ~TempFile() { ::unlink(path_.c_str()); }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline CheckResult run_external(const SyntaxChecker& checker, std::string_view snippet) {
  if (checker.timeout.count() <= 0) throw CheckerError("checker '" + checker.name + "' has no timeout");
  TempFile file(snippet);
  auto argv = split_command(checker.command, file.path());
  if (argv.empty()) throw CheckerError("checker '" + checker.name + "' has an empty command");
  if (!resolve_executable(argv[0])) throw CheckerError("checker executable not found: " + argv[0]);

  int err_pipe[2];
  if (::pipe(err_pipe) != 0) throw CheckerError("pipe failed");
  std::vector<char*> cargv;
  for (auto& a : argv) cargv.push_back(a.data());
  cargv.push_back(nullptr);
  // resolved before fork: only async-signal-safe calls run in the child
  const std::string workdir = std::filesystem::temp_directory_path().string();

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(err_pipe[0]);
    ::close(err_pipe[1]);
    throw CheckerError("fork failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    int devnull = ::open("/dev/null", O_RDWR);
    ::dup2(devnull, STDIN_FILENO);
    ::dup2(devnull, STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::close(err_pipe[0]);
    ::close(err_pipe[1]);
    if (::chdir(workdir.c_str()) != 0) ::_exit(126);
    ::execvp(cargv[0], cargv.data());
    ::_exit(127);
  }
  ::close(err_pipe[1]);
  ::fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

  std::string diagnostics;
  const auto deadline = std::chrono::steady_clock::now() + checker.timeout;
  int status = 0;
  bool done = false, timed_out = false;
  char buf[4096];
  while (!done) {
    pollfd pfd{err_pipe[0], POLLIN, 0};
    ::poll(&pfd, 1, 10);
    for (ssize_t n; (n = ::read(err_pipe[0], buf, sizeof buf)) > 0;) {
      if (diagnostics.size() < 64 * 1024) diagnostics.append(buf, static_cast<std::size_t>(n));
    }
    pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) {
      done = true;
    } else if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      timed_out = true;
      done = true;
    }
  }
  for (ssize_t n; (n = ::read(err_pipe[0], buf, sizeof buf)) > 0;) diagnostics.append(buf, static_cast<std::size_t>(n));
  ::close(err_pipe[0]);

  if (timed_out) return {false, "timeout after " + std::to_string(checker.timeout.count()) + " ms"};
  if (WIFEXITED(status)) {
    const int code = WEXITSTATUS(status);
    if (code == 127) throw CheckerError("checker '" + checker.name + "' could not be executed");
    return {code == 0, diagnostics};
  }
  return {false, "checker terminated by signal " + std::to_string(WTERMSIG(status))};
}

}  // namespace detail

/// Runs `checker` on `snippet`. Rejections are results; infrastructure
/// problems (missing executable, spawn failure) throw CheckerError.
inline CheckResult check_syntax(std::string_view snippet, const SyntaxChecker& checker) {
  switch (checker.kind) {
    case CheckerKind::builtin_assembly: {
      bool any = false;
      for (auto line : detail::split_lines(snippet)) {
        if (!detail::trim(line).empty()) any = true;
        auto r = detail::check_assembly_line(line);
        if (!r.accepted) return r;
      }
      if (!any) return {false, "empty snippet"};
      return {true, {}};
    }
    case CheckerKind::builtin_python:
      return detail::check_python(snippet);
    case CheckerKind::external_command:
      return detail::run_external(checker, snippet);
  }
  return {false, "unknown checker"};
}

/// CA score: 1 when the checker accepts the snippet, else 0.
inline int compilation_accuracy(std::string_view snippet, const SyntaxChecker& checker) {
  return check_syntax(snippet, checker).accepted ? 1 : 0;
}

}  // namespace evalkit
