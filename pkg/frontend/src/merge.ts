/**
 * Draft for folding clusters into groups. The panel drags cluster
 * chips between group boxes; this class only tracks who is where and
 * whether the mapping is total, which is the submit gate. Group ids
 * here are local working numbers; the server renumbers them
 * contiguously on submit.
 */
export class MergeDraft {
  private readonly assignment = new Map<number, number>();

  constructor(
    readonly clusterIds: number[],
    initial?: Record<string, number>,
  ) {
    if (initial) {
      for (const id of clusterIds) {
        const group = initial[String(id)];
        if (group !== undefined) this.assignment.set(id, group);
      }
    }
  }

  /** Every cluster starts as its own group. */
  static identity(clusterIds: number[]): MergeDraft {
    const draft = new MergeDraft(clusterIds);
    for (const id of clusterIds) draft.assign(id, id);
    return draft;
  }

  assign(clusterId: number, group: number): void {
    if (!this.clusterIds.includes(clusterId)) {
      throw new Error(`unknown cluster ${clusterId}`);
    }
    this.assignment.set(clusterId, group);
  }

  unassign(clusterId: number): void {
    this.assignment.delete(clusterId);
  }

  groupOf(clusterId: number): number | undefined {
    return this.assignment.get(clusterId);
  }

  /** Submittable only when total over all clusters. */
  get complete(): boolean {
    return this.clusterIds.every((id) => this.assignment.has(id));
  }

  get unassigned(): number[] {
    return this.clusterIds.filter((id) => !this.assignment.has(id));
  }

  /** group -> member clusters, for rendering the boxes. */
  groups(): Map<number, number[]> {
    const grouped = new Map<number, number[]>();
    for (const id of this.clusterIds) {
      const group = this.assignment.get(id);
      if (group === undefined) continue;
      const members = grouped.get(group) ?? [];
      members.push(id);
      grouped.set(group, members);
    }
    return grouped;
  }

  toApiMap(): Record<string, number> {
    if (!this.complete) {
      throw new Error(
        `merge draft is missing cluster(s): ${this.unassigned.join(", ")}`,
      );
    }
    const map: Record<string, number> = {};
    for (const [cluster, group] of this.assignment) {
      map[String(cluster)] = group;
    }
    return map;
  }
}
