#include "boxgraph/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace boxgraph {

BoundingBox BoundingBox::make(double x_min, double y_min, double width, double height) {
    BoundingBox b{x_min, y_min, width, height};
    require_valid(b);
    return b;
}

BoundingBox BoundingBox::from_corners(double x0, double y0, double x1, double y1) {
    return make(x0, y0, x1 - x0, y1 - y0);
}

bool BoundingBox::valid() const {
    return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(width) &&
           std::isfinite(height) && width > 0.0 && height > 0.0;
}

std::ostream& operator<<(std::ostream& os, const BoundingBox& b) {
    return os << '(' << b.x_min << ", " << b.y_min << ", " << b.width << ", " << b.height << ')';
}

void require_valid(const BoundingBox& b, const char* what) {
    if (!b.valid()) {
        std::ostringstream msg;
        msg << what << ' ' << b << " must have finite fields and positive width/height";
        throw std::invalid_argument(msg.str());
    }
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const double w = std::min(a.x_max(), b.x_max()) - std::max(a.x_min, b.x_min);
    const double h = std::min(a.y_max(), b.y_max()) - std::max(a.y_min, b.y_min);
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    require_valid(a);
    require_valid(b);
    const double inter = intersection_area(a, b);
    return inter / (a.area() + b.area() - inter);
}

bool contains(const BoundingBox& outer, const BoundingBox& inner) {
    require_valid(outer);
    require_valid(inner);
    return inner.x_min >= outer.x_min && inner.y_min >= outer.y_min &&
           inner.x_max() <= outer.x_max() && inner.y_max() <= outer.y_max();
}

bool center_inside(const BoundingBox& pred, const BoundingBox& gt) {
    require_valid(pred);
    require_valid(gt);
    const double cx = pred.center_x();
    const double cy = pred.center_y();
    return cx >= gt.x_min && cx <= gt.x_max() && cy >= gt.y_min && cy <= gt.y_max();
}

bool clip_to_frame(BoundingBox& b, double frame_width, double frame_height) {
    const double x0 = std::max(b.x_min, 0.0);
    const double y0 = std::max(b.y_min, 0.0);
    const double x1 = std::min(b.x_max(), frame_width);
    const double y1 = std::min(b.y_max(), frame_height);
    if (x1 <= x0 || y1 <= y0) return false;
    b = {x0, y0, x1 - x0, y1 - y0};
    return true;
}

}  // namespace boxgraph
