#pragma once

#include <ostream>

namespace boxgraph {

/// Axis-aligned box in continuous pixel coordinates, origin at the top-left.
///
/// Stored as (x_min, y_min, width, height). A valid box has finite fields and
/// strictly positive extent; use make() to construct a checked box.
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double width = 0.0;
    double height = 0.0;

    /// Throws std::invalid_argument if the result would be invalid.
    static BoundingBox make(double x_min, double y_min, double width, double height);
    static BoundingBox from_corners(double x0, double y0, double x1, double y1);

    double x_max() const { return x_min + width; }
    double y_max() const { return y_min + height; }
    double area() const { return width * height; }
    double center_x() const { return x_min + width / 2.0; }
    double center_y() const { return y_min + height / 2.0; }
    bool valid() const;

    BoundingBox translated(double dx, double dy) const {
        return {x_min + dx, y_min + dy, width, height};
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

std::ostream& operator<<(std::ostream& os, const BoundingBox& b);

/// Throws std::invalid_argument naming `what` when `b` is not a valid box.
void require_valid(const BoundingBox& b, const char* what = "bounding box");

/// Area of the intersection; 0 when the boxes are disjoint or only touch.
double intersection_area(const BoundingBox& a, const BoundingBox& b);

/// Intersection over union in [0, 1].
double iou(const BoundingBox& a, const BoundingBox& b);

/// True iff every point of `inner` lies in `outer` (closed intervals).
bool contains(const BoundingBox& outer, const BoundingBox& inner);

/// True iff the center of `pred` lies in `gt` (closed intervals).
bool center_inside(const BoundingBox& pred, const BoundingBox& gt);

/// Clip to [0, frame_width] x [0, frame_height]. Returns false and leaves `b`
/// untouched when nothing of the box remains inside the frame.
bool clip_to_frame(BoundingBox& b, double frame_width, double frame_height);

}  // namespace boxgraph
