/** Parser for the run artifacts' CSV dialect: leading "# key=value" meta
 * comment lines, then a header row, then plain comma-separated rows. */

export interface CsvTable {
  meta: Record<string, string>;
  header: string[];
  rows: Record<string, string>[];
}

export function parseCsv(text: string): CsvTable {
  const meta: Record<string, string> = {};
  const rows: Record<string, string>[] = [];
  let header: string[] | null = null;
  for (const line of text.split("\n")) {
    if (line.startsWith("#")) {
      const body = line.slice(1).trim();
      const eq = body.indexOf("=");
      if (eq >= 0) meta[body.slice(0, eq).trim()] = body.slice(eq + 1).trim();
    } else if (header === null) {
      if (line.trim() !== "") header = line.split(",");
    } else if (line.trim() !== "") {
      const cells = line.split(",");
      const row: Record<string, string> = {};
      header.forEach((key, i) => (row[key] = cells[i] ?? ""));
      rows.push(row);
    }
  }
  return { meta, header: header ?? [], rows };
}

export function num(row: Record<string, string>, key: string): number {
  return Number(row[key]);
}
