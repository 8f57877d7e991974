#include "oblimatch/viz.hpp"

#include <sstream>
#include <stdexcept>

namespace oblimatch {

namespace {

constexpr double kMargin = 12.0;
constexpr double kGap = 24.0;

void append_circle(std::ostringstream& svg, double cx, double cy, const char* fill) {
  svg << "  <circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"2\" fill=\"" << fill << "\"/>\n";
}

}  // namespace

std::string render_matches_svg(const KeypointSet& kps_a, const KeypointSet& kps_b,
                               const MatchList& matches,
                               const std::optional<std::vector<bool>>& correctness) {
  if (correctness && correctness->size() != matches.size()) {
    throw std::invalid_argument("render_matches_svg: correctness not aligned with matches");
  }
  const double wa = kps_a.image_size[0];
  const double ha = kps_a.image_size[1];
  const double wb = kps_b.image_size[0];
  const double hb = kps_b.image_size[1];
  const double offset_b = kMargin + wa + kGap;
  const double width = offset_b + wb + kMargin;
  const double height = 2.0 * kMargin + std::max(ha, hb);

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "  <rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << wa
      << "\" height=\"" << ha << "\" fill=\"#f4f4f4\" stroke=\"#444444\"/>\n";
  svg << "  <rect x=\"" << offset_b << "\" y=\"" << kMargin << "\" width=\"" << wb
      << "\" height=\"" << hb << "\" fill=\"#f4f4f4\" stroke=\"#444444\"/>\n";

  for (std::size_t i = 0; i < matches.size(); ++i) {
    const auto& m = matches[i];
    const auto& pa = kps_a.coords[static_cast<std::size_t>(m.index_a)];
    const auto& pb = kps_b.coords[static_cast<std::size_t>(m.index_b)];
    const char* color = "#888888";
    if (correctness) color = (*correctness)[i] ? "#2da44e" : "#d1242f";
    svg << "  <line x1=\"" << kMargin + pa.x() << "\" y1=\"" << kMargin + pa.y() << "\" x2=\""
        << offset_b + pb.x() << "\" y2=\"" << kMargin + pb.y() << "\" stroke=\"" << color
        << "\" stroke-width=\"0.8\"/>\n";
  }
  for (const auto& p : kps_a.coords) append_circle(svg, kMargin + p.x(), kMargin + p.y(), "#1f6feb");
  for (const auto& p : kps_b.coords) append_circle(svg, offset_b + p.x(), kMargin + p.y(), "#1f6feb");

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace oblimatch
