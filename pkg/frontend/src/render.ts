/** SVG to PNG rasterization with a pinned font configuration. */

import { Resvg } from "@resvg/resvg-js";

export function svgToPng(svg: string): Buffer {
  const renderer = new Resvg(svg, {
    background: "#ffffff",
    font: {
      loadSystemFonts: true,
      defaultFontFamily: "DejaVu Sans",
    },
  });
  return renderer.render().asPng();
}
