#pragma once

// UPPAAL 4.x flat-XML reader and writer.

#include <sstream>
#include <string>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "pspta/errors.hpp"
#include "pspta/ta/model.hpp"

namespace pspta::ta {

namespace detail {

using boost::property_tree::ptree;

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline void copy_xy(const ptree& node, const std::string& prefix, Annotations& out) {
  if (auto attrs = node.get_child_optional("<xmlattr>")) {
    for (const auto& [k, v] : *attrs) {
      if (k != "x" && k != "y") continue;
      out[prefix.empty() ? k : prefix + "." + k] = v.data();
    }
  }
}

inline std::string attr(const ptree& node, const std::string& key) {
  return node.get<std::string>("<xmlattr>." + key, "");
}

/// True when the text holds nothing but whitespace and comments.
inline bool blank_code(const std::string& text) {
  try {
    return lex(text).size() == 1;
  } catch (const ExprError&) {
    return false;
  }
}

inline std::vector<std::string> parse_system_line(const std::string& text) {
  Parser p(text);
  std::vector<std::string> out;
  if (!p.is_word("system")) {
    if (p.peek(1).kind == Token::Kind::Punct && p.peek(1).text == "=")
      throw UnsupportedFeature("process instantiations with template parameters are not supported");
    p.fail("expected 'system' declaration");
  }
  p.take();
  for (;;) {
    out.push_back(p.ident());
    if (p.is("(")) throw UnsupportedFeature("parameterised template instantiation is not supported");
    if (p.is(",") || p.is("<")) {
      if (p.is("<")) throw UnsupportedFeature("process priorities are not supported");
      p.take();
      continue;
    }
    break;
  }
  p.expect(";");
  if (!p.at_end()) p.fail("unexpected text after system line");
  return out;
}

inline std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string xy_attrs(const Annotations& a, const std::string& prefix) {
  std::string out;
  auto key = [&](const char* k) { return prefix.empty() ? std::string(k) : prefix + "." + k; };
  if (auto it = a.find(key("x")); it != a.end()) out += " x=\"" + escape(it->second) + "\"";
  if (auto it = a.find(key("y")); it != a.end()) out += " y=\"" + escape(it->second) + "\"";
  return out;
}

} // namespace detail

/// Parses UPPAAL flat XML into a validated model.
inline NtaModel parse_model(const std::string& xml_text, bool check = true) {
  using detail::ptree;
  ptree doc;
  try {
    std::istringstream in(xml_text);
    boost::property_tree::read_xml(in, doc);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw SchemaError(std::string("malformed XML: ") + e.what());
  }
  auto nta = doc.get_child_optional("nta");
  if (!nta) throw SchemaError("missing <nta> root element");

  NtaModel m;
  for (const auto& [tag, node] : *nta) {
    if (tag == "<xmlattr>" || tag == "<xmlcomment>" || tag == "queries") continue;
    if (tag == "declaration") {
      m.global_decls = parse_declarations(node.data());
    } else if (tag == "template") {
      TemplateAutomaton t;
      t.name = detail::trim(node.get<std::string>("name", ""));
      if (t.name.empty()) throw SchemaError("template without a name");
      if (auto n = node.get_child_optional("name")) detail::copy_xy(*n, "name", t.annotations);
      if (auto par = node.get_optional<std::string>("parameter"); par && !detail::blank_code(*par))
        throw UnsupportedFeature("template parameters are not supported (template " + t.name + ")");
      for (const auto& [ctag, child] : node) {
        if (ctag == "declaration") {
          t.local_decls = parse_declarations(child.data(), &m.global_decls);
        } else if (ctag == "location") {
          Location l;
          l.id = detail::attr(child, "id");
          if (l.id.empty()) throw SchemaError("location without id in template " + t.name);
          detail::copy_xy(child, "", l.annotations);
          for (const auto& [ltag, lnode] : child) {
            if (ltag == "name") {
              l.name = detail::trim(lnode.data());
              detail::copy_xy(lnode, "name", l.annotations);
            } else if (ltag == "committed") {
              l.kind = LocationKind::Committed;
            } else if (ltag == "urgent") {
              l.kind = LocationKind::Urgent;
            } else if (ltag == "label") {
              std::string kind = detail::attr(lnode, "kind");
              if (kind == "invariant") {
                try {
                  if (!detail::blank_code(lnode.data())) l.invariant = parse_expr(lnode.data());
                } catch (const ExprError& e) {
                  throw ExprError("invariant of location " + l.id + " in " + t.name + ": " + e.what());
                }
                detail::copy_xy(lnode, "invariant", l.annotations);
              } else if (kind == "comments") {
                l.annotations["comments"] = lnode.data();
                detail::copy_xy(lnode, "comments", l.annotations);
              } else {
                throw UnsupportedFeature("location label kind '" + kind + "' is not supported");
              }
            } else if (ltag != "<xmlattr>" && ltag != "<xmlcomment>") {
              throw SchemaError("unexpected <" + ltag + "> in location " + l.id);
            }
          }
          t.locations.push_back(std::move(l));
        } else if (ctag == "init") {
          t.initial = detail::attr(child, "ref");
        } else if (ctag == "transition") {
          Transition tr;
          std::string tid = detail::attr(child, "id");
          if (!tid.empty()) tr.annotations["id"] = tid;
          std::string label = "transition " + (tid.empty() ? "#" + std::to_string(t.transitions.size()) : tid) +
                              " in " + t.name;
          std::string nails;
          for (const auto& [ttag, tnode] : child) {
            if (ttag == "source") {
              tr.source = detail::attr(tnode, "ref");
            } else if (ttag == "target") {
              tr.target = detail::attr(tnode, "ref");
            } else if (ttag == "label") {
              std::string kind = detail::attr(tnode, "kind");
              const std::string& text = tnode.data();
              try {
                if (kind == "guard") {
                  if (!detail::blank_code(text)) tr.guard = parse_expr(text);
                } else if (kind == "synchronisation") {
                  if (!detail::blank_code(text)) tr.sync = parse_sync(text);
                } else if (kind == "assignment") {
                  tr.assignments = parse_assignments(text);
                } else if (kind == "comments") {
                  tr.annotations["comments"] = text;
                } else {
                  throw UnsupportedFeature("transition label kind '" + kind + "' is not supported (" + label + ")");
                }
              } catch (const ExprError& e) {
                throw ExprError(label + ": " + e.what());
              }
              detail::copy_xy(tnode, kind, tr.annotations);
            } else if (ttag == "nail") {
              if (!nails.empty()) nails += ";";
              nails += detail::attr(tnode, "x") + "," + detail::attr(tnode, "y");
            } else if (ttag != "<xmlattr>" && ttag != "<xmlcomment>") {
              throw SchemaError("unexpected <" + ttag + "> in " + label);
            }
          }
          if (!nails.empty()) tr.annotations["nails"] = nails;
          t.transitions.push_back(std::move(tr));
        } else if (ctag == "branchpoint") {
          throw UnsupportedFeature("branchpoints are not supported (template " + t.name + ")");
        } else if (ctag != "name" && ctag != "parameter" && ctag != "<xmlattr>" && ctag != "<xmlcomment>") {
          throw SchemaError("unexpected <" + ctag + "> in template " + t.name);
        }
      }
      if (t.initial.empty()) throw SchemaError("template " + t.name + " lacks an <init> element");
      m.templates.push_back(std::move(t));
    } else if (tag == "instantiation") {
      if (!detail::blank_code(node.data()))
        throw UnsupportedFeature("process instantiations are not supported");
    } else if (tag == "system") {
      m.system = detail::parse_system_line(node.data());
    } else {
      throw SchemaError("unexpected <" + tag + "> in <nta>");
    }
  }
  if (check) validate(m);
  return m;
}

inline std::string serialize_model(const NtaModel& m) {
  using detail::escape;
  using detail::xy_attrs;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n"
      << "<!DOCTYPE nta PUBLIC '-//Uppaal Team//DTD Flat System 1.1//EN' "
         "'http://www.it.uu.se/research/group/darts/uppaal/flat-1_2.dtd'>\n"
      << "<nta>\n";
  out << "\t<declaration>" << escape(to_string(m.global_decls)) << "</declaration>\n";
  for (const auto& t : m.templates) {
    out << "\t<template>\n";
    out << "\t\t<name" << xy_attrs(t.annotations, "name") << ">" << escape(t.name) << "</name>\n";
    if (!t.local_decls.empty())
      out << "\t\t<declaration>" << escape(to_string(t.local_decls)) << "</declaration>\n";
    for (const auto& l : t.locations) {
      out << "\t\t<location id=\"" << escape(l.id) << "\"" << xy_attrs(l.annotations, "") << ">\n";
      if (l.name)
        out << "\t\t\t<name" << xy_attrs(l.annotations, "name") << ">" << escape(*l.name) << "</name>\n";
      if (l.invariant)
        out << "\t\t\t<label kind=\"invariant\"" << xy_attrs(l.annotations, "invariant") << ">"
            << escape(to_string(*l.invariant)) << "</label>\n";
      if (auto it = l.annotations.find("comments"); it != l.annotations.end())
        out << "\t\t\t<label kind=\"comments\"" << xy_attrs(l.annotations, "comments") << ">"
            << escape(it->second) << "</label>\n";
      if (l.kind == LocationKind::Committed) out << "\t\t\t<committed/>\n";
      if (l.kind == LocationKind::Urgent) out << "\t\t\t<urgent/>\n";
      out << "\t\t</location>\n";
    }
    out << "\t\t<init ref=\"" << escape(t.initial) << "\"/>\n";
    for (const auto& tr : t.transitions) {
      out << "\t\t<transition";
      if (auto it = tr.annotations.find("id"); it != tr.annotations.end())
        out << " id=\"" << escape(it->second) << "\"";
      out << ">\n";
      out << "\t\t\t<source ref=\"" << escape(tr.source) << "\"/>\n";
      out << "\t\t\t<target ref=\"" << escape(tr.target) << "\"/>\n";
      if (tr.guard)
        out << "\t\t\t<label kind=\"guard\"" << xy_attrs(tr.annotations, "guard") << ">"
            << escape(to_string(*tr.guard)) << "</label>\n";
      if (tr.sync)
        out << "\t\t\t<label kind=\"synchronisation\"" << xy_attrs(tr.annotations, "synchronisation") << ">"
            << escape(to_string(*tr.sync)) << "</label>\n";
      if (!tr.assignments.empty())
        out << "\t\t\t<label kind=\"assignment\"" << xy_attrs(tr.annotations, "assignment") << ">"
            << escape(to_string(tr.assignments)) << "</label>\n";
      if (auto it = tr.annotations.find("comments"); it != tr.annotations.end())
        out << "\t\t\t<label kind=\"comments\"" << xy_attrs(tr.annotations, "comments") << ">"
            << escape(it->second) << "</label>\n";
      if (auto it = tr.annotations.find("nails"); it != tr.annotations.end()) {
        std::istringstream ns(it->second);
        std::string pt;
        while (std::getline(ns, pt, ';')) {
          auto comma = pt.find(',');
          out << "\t\t\t<nail x=\"" << escape(pt.substr(0, comma)) << "\" y=\""
              << escape(comma == std::string::npos ? "" : pt.substr(comma + 1)) << "\"/>\n";
        }
      }
      out << "\t\t</transition>\n";
    }
    out << "\t</template>\n";
  }
  out << "\t<system>system ";
  for (std::size_t i = 0; i < m.system.size(); ++i) out << (i ? ", " : "") << escape(m.system[i]);
  out << ";</system>\n";
  out << "</nta>\n";
  return out.str();
}

} // namespace pspta::ta
