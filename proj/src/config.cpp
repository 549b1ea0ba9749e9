#include "optidice/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace optidice {

namespace {

std::string strip(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

/// Removes a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

nlohmann::json parse_scalar(const std::string& token, int line_no) {
    if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
        return token.substr(1, token.size() - 2);
    }
    if (token == "true") return true;
    if (token == "false") return false;
    try {
        std::size_t used = 0;
        if (token.find_first_of(".eE") == std::string::npos) {
            const long long v = std::stoll(token, &used);
            if (used == token.size()) return v;
        }
        const double v = std::stod(token, &used);
        if (used == token.size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("config: cannot parse value '" + token + "' at line " +
                                std::to_string(line_no));
}

nlohmann::json parse_value(const std::string& token, int line_no) {
    if (!token.empty() && token.front() == '[') {
        if (token.back() != ']') {
            throw std::invalid_argument("config: unterminated array at line " +
                                        std::to_string(line_no));
        }
        nlohmann::json arr = nlohmann::json::array();
        std::string inner = token.substr(1, token.size() - 2);
        std::stringstream ss(inner);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = strip(item);
            if (!item.empty()) arr.push_back(parse_scalar(item, line_no));
        }
        return arr;
    }
    return parse_scalar(token, line_no);
}

} // namespace

nlohmann::json parse_toml(const std::string& text) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        line = strip(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw std::invalid_argument("config: malformed table header at line " +
                                            std::to_string(line_no));
            }
            const std::string name = strip(line.substr(1, line.size() - 2));
            table = &root[name];
            if (table->is_null()) *table = nlohmann::json::object();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(line_no));
        }
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw std::invalid_argument("config: empty key or value at line " +
                                        std::to_string(line_no));
        }
        (*table)[key] = parse_value(value, line_no);
    }
    return root;
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open config file: " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (c == '{') return nlohmann::json::parse(text);
        break;
    }
    return parse_toml(text);
}

} // namespace optidice
